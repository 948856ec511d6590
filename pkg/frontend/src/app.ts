/** Review app: one card at a time, accept / reject / drag-select adjust.
 *
 * The client holds no state the server cannot rebuild: the queue and stats
 * are re-fetched whenever the local card buffer runs out, so a reload
 * always lands in a consistent place.  Keyboard shortcuts: A accept,
 * R reject, J adjust mode, Enter confirm selection, Escape cancel.
 */

import { ApiError, ReviewApi } from "./api.js";
import { renderHighlighted, selectionOffsets } from "./offsets.js";
import type { ReviewCard, Stats } from "./types.js";

const QUEUE_BATCH = 10;

export class ReviewApp {
  private cards: ReviewCard[] = [];
  private stats: Stats | null = null;
  private adjustMode = false;
  private busy = false;
  private readonly keyHandler = (e: KeyboardEvent) => this.onKey(e);

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ReviewApi,
    private readonly reviewer: string = "ui",
  ) {}

  /** Current card, if any. */
  get current(): ReviewCard | null {
    return this.cards[0] ?? null;
  }

  async start(): Promise<void> {
    this.root.ownerDocument.addEventListener("keydown", this.keyHandler);
    await this.refresh();
  }

  /** Detach document-level listeners (used by tests and page teardown). */
  dispose(): void {
    this.root.ownerDocument.removeEventListener("keydown", this.keyHandler);
  }

  /** Reload queue and stats from the server. */
  async refresh(): Promise<void> {
    try {
      const [cards, stats] = await Promise.all([
        this.api.loadQueue(QUEUE_BATCH),
        this.api.getStats(),
      ]);
      this.cards = cards;
      this.stats = stats;
      this.adjustMode = false;
      this.render();
    } catch (err) {
      this.renderRetry(err);
    }
  }

  async accept(): Promise<void> {
    await this.decide("accept");
  }

  async reject(): Promise<void> {
    await this.decide("reject");
  }

  beginAdjust(): void {
    if (!this.current || this.adjustMode) return;
    this.adjustMode = true;
    this.render();
    this.banner("Select the correct span in the article, then press Enter.", "hint");
  }

  cancelAdjust(): void {
    if (!this.adjustMode) return;
    this.adjustMode = false;
    this.render();
  }

  /** Convert the current selection to offsets and submit the adjustment. */
  async confirmAdjust(): Promise<void> {
    const card = this.current;
    if (!card || !this.adjustMode || this.busy) return;
    const contextEl = this.root.querySelector<HTMLElement>(".context");
    if (!contextEl) return;
    const doc = this.root.ownerDocument;
    const offsets = selectionOffsets(
      contextEl,
      doc.defaultView ? doc.defaultView.getSelection() : null,
    );
    if (!offsets) {
      this.banner("Select text inside the article first.", "error");
      return;
    }
    await this.decide("adjust", [offsets.start, offsets.end]);
  }

  private async decide(
    action: "accept" | "reject" | "adjust",
    span?: [number, number],
  ): Promise<void> {
    const card = this.current;
    if (!card || this.busy) return;
    this.busy = true;
    try {
      const response = await this.api.submitDecision(
        card.id,
        action,
        span,
        this.reviewer,
      );
      this.stats = response.stats;
      this.adjustMode = false;
      this.cards.shift();
      if (this.cards.length === 0) {
        this.busy = false;
        await this.refresh();
        return;
      }
      this.render();
    } catch (err) {
      if (err instanceof ApiError) {
        // validation problem (e.g. bad span): keep the card, show the reason
        this.banner(`Rejected by server: ${err.message}`, "error");
      } else {
        this.renderRetry(err);
      }
    } finally {
      this.busy = false;
    }
  }

  private onKey(event: KeyboardEvent): void {
    const key = event.key.toLowerCase();
    if (key === "a" && !this.adjustMode) void this.accept();
    else if (key === "r" && !this.adjustMode) void this.reject();
    else if (key === "j") this.beginAdjust();
    else if (key === "enter" && this.adjustMode) void this.confirmAdjust();
    else if (key === "escape") this.cancelAdjust();
  }

  // -- rendering --------------------------------------------------------------

  private render(): void {
    const card = this.current;
    this.root.textContent = "";
    this.root.appendChild(this.statsBar());
    if (!card) {
      const done = this.el("div", "done");
      done.textContent = "Queue empty — every span is reviewed.";
      this.root.appendChild(done);
      return;
    }
    const article = this.el("article", "card");

    const meta = this.el("div", "meta");
    meta.textContent = `id ${card.id} · score ${card.score.toFixed(2)} · ${card.status}`;
    article.appendChild(meta);

    const title = this.el("h2", "title");
    title.textContent = card.title;
    article.appendChild(title);

    const answer = this.el("p", "answer");
    answer.textContent = `User answer: ${card.answer}`;
    article.appendChild(answer);

    const context = this.el("div", "context");
    renderHighlighted(context, card.context, card.span);
    article.appendChild(context);

    article.appendChild(this.controls());
    const banner = this.el("div", "banner");
    banner.hidden = true;
    article.appendChild(banner);

    this.root.appendChild(article);
    if (this.cards.length > 1) {
      this.root.appendChild(this.upNext());
    }
  }

  /** Collapsed previews of the rest of the queue, in queue order. */
  private upNext(): HTMLElement {
    const list = this.el("aside", "up-next");
    for (const card of this.cards.slice(1)) {
      const preview = this.el("div", "card-preview");
      preview.textContent = `${card.id} · ${card.title}`;
      list.appendChild(preview);
    }
    return list;
  }

  private controls(): HTMLElement {
    const bar = this.el("div", "controls");
    if (!this.adjustMode) {
      bar.appendChild(this.button("accept", "Accept (A)", () => void this.accept()));
      bar.appendChild(this.button("reject", "Reject (R)", () => void this.reject()));
      bar.appendChild(this.button("adjust", "Adjust (J)", () => this.beginAdjust()));
    } else {
      bar.appendChild(
        this.button("confirm", "Confirm selection (Enter)", () => void this.confirmAdjust()),
      );
      bar.appendChild(this.button("cancel", "Cancel (Esc)", () => this.cancelAdjust()));
    }
    return bar;
  }

  private statsBar(): HTMLElement {
    const bar = this.el("header", "stats");
    if (this.stats) {
      const { pending, by_action } = this.stats;
      bar.textContent =
        `pending ${pending} · accepted ${by_action.accept} · ` +
        `rejected ${by_action.reject} · adjusted ${by_action.adjust}`;
    } else {
      bar.textContent = "loading…";
    }
    return bar;
  }

  private renderRetry(err: unknown): void {
    // network trouble: nothing is lost server-side, offer a reload
    this.root.textContent = "";
    const banner = this.el("div", "banner retry");
    banner.textContent = `Cannot reach the review service (${String(err)}). `;
    banner.appendChild(this.button("retry", "Retry", () => void this.refresh()));
    this.root.appendChild(banner);
  }

  private banner(message: string, kind: "error" | "hint"): void {
    const banner = this.root.querySelector<HTMLElement>(".banner");
    if (!banner) return;
    banner.textContent = message;
    banner.className = `banner ${kind}`;
    banner.hidden = false;
  }

  private el(tag: string, className: string): HTMLElement {
    const node = this.root.ownerDocument.createElement(tag);
    node.className = className;
    return node;
  }

  private button(id: string, label: string, onClick: () => void): HTMLElement {
    const button = this.root.ownerDocument.createElement("button");
    button.id = id;
    button.textContent = label;
    button.addEventListener("click", onClick);
    return button;
  }
}
