/** Suggestion review flow.
 *
 * Each pending suggestion row offers Accept, Reject, and Edit. Actions are
 * posted to the service edit endpoint; the row updates optimistically and
 * is reconciled against the returned report. Reviewed rows are disabled,
 * repeat actions on the same row are rejected locally without a network
 * call, and a 409 conflict from the service surfaces a refresh prompt.
 */

import { ApiError, ContrastReportView, ReviewAction, SchemaView, SuggestionStatus } from "./api.js";

export interface ReviewRow {
  suggestionId: string;
  target: string;
  targetLabel: string;
  tag: string;
  text: string;
  status: SuggestionStatus;
  reviewed: boolean;
  actionsEnabled: boolean;
}

/** Rows for a contrast report, resolving dimension ids to display names. */
export function buildReviewRows(report: ContrastReportView, schema: SchemaView | null): ReviewRow[] {
  const names = new Map<string, string>();
  if (schema !== null) {
    for (const dimension of schema.dimensions) {
      names.set(dimension.id, dimension.name);
    }
  }
  return report.suggestions.map((suggestion) => {
    const reviewed = suggestion.status !== "pending";
    return {
      suggestionId: suggestion.id,
      target: suggestion.target,
      targetLabel: names.get(suggestion.target) ?? suggestion.target,
      tag: suggestion.tag,
      text: suggestion.status === "edited" && suggestion.edited_text !== null ? suggestion.edited_text : suggestion.text,
      status: suggestion.status,
      reviewed,
      actionsEnabled: !reviewed,
    };
  });
}

export type ReviewOutcome =
  | { kind: "applied"; report: ContrastReportView }
  | { kind: "ignored"; reason: string }
  | { kind: "conflict"; refreshPrompt: string }
  | { kind: "failed"; message: string; retryable: true };

export type SubmitReview = (
  recordId: string,
  suggestionId: string,
  action: ReviewAction,
) => Promise<ContrastReportView>;

/** Holds one report's review state and guards against duplicate submissions. */
export class ReviewController {
  report: ContrastReportView;
  private submit: SubmitReview;
  private inFlight: Set<string> = new Set();

  constructor(report: ContrastReportView, submit: SubmitReview) {
    this.report = report;
    this.submit = submit;
  }

  rows(schema: SchemaView | null): ReviewRow[] {
    return buildReviewRows(this.report, schema);
  }

  private statusFor(action: ReviewAction): SuggestionStatus {
    if (action.kind === "Accept") {
      return "accepted";
    }
    if (action.kind === "Reject") {
      return "rejected";
    }
    return "edited";
  }

  private applyLocal(suggestionId: string, status: SuggestionStatus, editedText: string | null): void {
    this.report = {
      ...this.report,
      suggestions: this.report.suggestions.map((suggestion) =>
        suggestion.id === suggestionId ? { ...suggestion, status, edited_text: editedText } : suggestion,
      ),
    };
  }

  async review(suggestionId: string, action: ReviewAction): Promise<ReviewOutcome> {
    const suggestion = this.report.suggestions.find((candidate) => candidate.id === suggestionId);
    if (!suggestion) {
      return { kind: "ignored", reason: `no suggestion ${suggestionId} in this report` };
    }
    if (suggestion.status !== "pending") {
      return { kind: "ignored", reason: `suggestion ${suggestionId} is already ${suggestion.status}` };
    }
    if (this.inFlight.has(suggestionId)) {
      return { kind: "ignored", reason: `suggestion ${suggestionId} has a review in flight` };
    }

    const before = this.report;
    this.inFlight.add(suggestionId);
    this.applyLocal(suggestionId, this.statusFor(action), action.kind === "Edit" ? action.text : null);
    try {
      const updated = await this.submit(this.report.record_id, suggestionId, action);
      this.report = updated;
      return { kind: "applied", report: updated };
    } catch (error) {
      this.report = before;
      if (error instanceof ApiError && error.status === 409) {
        return {
          kind: "conflict",
          refreshPrompt: `This suggestion changed on the server (${error.message}). Refresh the session and review again.`,
        };
      }
      const message = error instanceof Error ? error.message : String(error);
      return { kind: "failed", message, retryable: true };
    } finally {
      this.inFlight.delete(suggestionId);
    }
  }
}
