/** Error toasts with HTTP status; a small queue the view renders. */

export interface Toast {
  id: number;
  message: string;
  status: number | null; // HTTP status when the error came off the wire
  at: number;
}

export class ToastQueue {
  private items: Toast[] = [];
  private nextId = 1;

  constructor(
    private readonly ttlMs = 6000,
    private readonly now: () => number = () => Date.now(),
  ) {}

  push(message: string, status: number | null = null): Toast {
    const t = { id: this.nextId++, message, status, at: this.now() };
    this.items.push(t);
    return t;
  }

  dismiss(id: number): void {
    this.items = this.items.filter((t) => t.id !== id);
  }

  /** Live toasts, expiring anything older than the ttl. */
  active(): Toast[] {
    const cutoff = this.now() - this.ttlMs;
    this.items = this.items.filter((t) => t.at > cutoff);
    return this.items.slice();
  }
}

export function toastText(t: Toast): string {
  return t.status === null ? t.message : `HTTP ${t.status}: ${t.message}`;
}
