"""In-process chat-completions endpoint for transport tests.

Serves POST /chat/completions on a loopback port, delegating the reply to
a caller-supplied function of the prompt text. Runs in a daemon thread.
"""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class FakeChatServer:
    def __init__(self, reply_fn, status=200):
        self.reply_fn = reply_fn
        self.status = status
        self.requests = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length))
                outer.requests.append({
                    "path": self.path,
                    "payload": payload,
                    "authorization": self.headers.get("Authorization"),
                })
                if outer.status != 200:
                    self.send_response(outer.status)
                    self.end_headers()
                    self.wfile.write(b"simulated failure")
                    return
                prompt = payload["messages"][0]["content"]
                content = outer.reply_fn(prompt)
                body = json.dumps({
                    "choices": [{"message": {"role": "assistant", "content": content}}]
                }).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def base_url(self):
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
        return False
