/** Non-blocking toast queue for fetch and render failures.
 *
 * Toasts never block the canvas; each carries an optional retry callback
 * so a failed request can be reissued in place.
 */

export interface Toast {
  id: number;
  message: string;
  retry: (() => void) | null;
}

export class ToastQueue {
  private toasts: Toast[] = [];
  private nextId = 1;

  push(message: string, retry: (() => void) | null = null): Toast {
    const toast: Toast = { id: this.nextId, message, retry };
    this.nextId += 1;
    this.toasts.push(toast);
    return toast;
  }

  dismiss(id: number): void {
    this.toasts = this.toasts.filter((toast) => toast.id !== id);
  }

  retry(id: number): boolean {
    const toast = this.toasts.find((candidate) => candidate.id === id);
    if (!toast || toast.retry === null) {
      return false;
    }
    this.dismiss(id);
    toast.retry();
    return true;
  }

  list(): readonly Toast[] {
    return this.toasts;
  }
}
