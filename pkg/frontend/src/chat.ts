// Chat transcript view. Reply text always goes through textContent so the
// answer bytes reach the patient exactly as the service sent them: no
// markdown, no HTML interpretation, no trimming.

import { ApiClient, ChatResponse, RateLimitedError, Route, newSessionId } from "./api.js";

const BADGE_LABELS: Record<Route, string> = {
    clinical: "Verified answer from the clinical FAQ",
    casual: "Conversational reply (generated)",
    blocked: "Message blocked by the safety filter",
};

const BADGE_TEXT: Record<Route, string> = {
    clinical: "FAQ answer",
    casual: "small talk",
    blocked: "blocked",
};

export class ChatView {
    private api: ApiClient;
    private sessionId: string;
    private transcript: HTMLElement;
    private input: HTMLInputElement;
    private sendButton: HTMLButtonElement;
    private notice: HTMLElement;
    private inFlight = false;
    private countdownTimer: ReturnType<typeof setInterval> | null = null;

    constructor(root: HTMLElement, api: ApiClient, sessionId: string = newSessionId()) {
        this.api = api;
        this.sessionId = sessionId;

        this.transcript = document.createElement("div");
        this.transcript.className = "transcript";
        this.transcript.setAttribute("role", "log");
        this.transcript.setAttribute("aria-live", "polite");
        this.transcript.setAttribute("aria-label", "Conversation");

        this.notice = document.createElement("div");
        this.notice.className = "notice";
        this.notice.setAttribute("role", "status");
        this.notice.hidden = true;

        const form = document.createElement("form");
        form.className = "composer";
        this.input = document.createElement("input");
        this.input.type = "text";
        this.input.name = "message";
        this.input.autocomplete = "off";
        this.input.setAttribute("aria-label", "Type your message");
        this.input.placeholder = "Type your question or message...";
        this.sendButton = document.createElement("button");
        this.sendButton.type = "submit";
        this.sendButton.textContent = "Send";
        this.sendButton.setAttribute("aria-label", "Send message");
        form.append(this.input, this.sendButton);
        form.addEventListener("submit", (event) => {
            event.preventDefault();
            void this.send();
        });

        root.append(this.transcript, this.notice, form);
    }

    async send(): Promise<void> {
        const text = this.input.value.trim();
        if (!text || this.inFlight) return;
        this.hideNotice();
        this.appendUserTurn(text);
        this.input.value = "";
        this.setBusy(true);
        try {
            const response = await this.api.chat(this.sessionId, text);
            this.appendSystemTurn(response);
        } catch (error) {
            this.input.value = text; // preserve the message for retry
            if (error instanceof RateLimitedError) {
                this.startCountdown(error.retryAfterS);
            } else {
                this.showNotice("The service did not answer. Your message is kept; please try again.");
            }
        } finally {
            this.setBusy(false);
        }
    }

    private appendUserTurn(text: string): void {
        const turn = document.createElement("div");
        turn.className = "turn user";
        const bubble = document.createElement("p");
        bubble.className = "bubble";
        bubble.textContent = text;
        turn.appendChild(bubble);
        this.transcript.appendChild(turn);
        this.scrollToEnd();
    }

    private appendSystemTurn(response: ChatResponse): void {
        const turn = document.createElement("div");
        turn.className = `turn system route-${response.route}`;

        const badge = document.createElement("span");
        badge.className = `badge badge-${response.route}`;
        badge.textContent = BADGE_TEXT[response.route];
        badge.setAttribute("role", "img");
        badge.setAttribute("aria-label", BADGE_LABELS[response.route]);
        if (response.route === "clinical" && response.matched_question) {
            badge.title = `Matched question: ${response.matched_question}`;
        }
        turn.appendChild(badge);

        if (response.route === "clinical" && response.matched_question) {
            const matched = document.createElement("div");
            matched.className = "matched-question";
            matched.textContent = `Answering: ${response.matched_question}`;
            turn.appendChild(matched);
        }

        const bubble = document.createElement("p");
        bubble.className = "bubble";
        bubble.textContent = response.reply; // verbatim: textContent, never innerHTML
        turn.appendChild(bubble);

        const footer = document.createElement("div");
        footer.className = "turn-footer";
        const scorePart = response.score === null ? "" : `score ${response.score.toFixed(3)} · `;
        footer.textContent = `${scorePart}${response.latency_ms.toFixed(1)} ms`;
        turn.appendChild(footer);

        if (response.degraded) {
            const degraded = document.createElement("div");
            degraded.className = "degraded-note";
            degraded.textContent = "Reduced service: a standard reply was used.";
            turn.appendChild(degraded);
        }

        this.transcript.appendChild(turn);
        this.scrollToEnd();
    }

    private startCountdown(seconds: number): void {
        let remaining = Math.ceil(seconds);
        this.showNotice(`Too many messages. You can send again in ${remaining}s.`);
        this.sendButton.disabled = true;
        if (this.countdownTimer !== null) clearInterval(this.countdownTimer);
        this.countdownTimer = setInterval(() => {
            remaining -= 1;
            if (remaining <= 0) {
                if (this.countdownTimer !== null) clearInterval(this.countdownTimer);
                this.countdownTimer = null;
                this.sendButton.disabled = false;
                this.hideNotice();
            } else {
                this.showNotice(`Too many messages. You can send again in ${remaining}s.`);
            }
        }, 1000);
    }

    private setBusy(busy: boolean): void {
        this.inFlight = busy;
        this.input.disabled = busy;
        if (this.countdownTimer === null) this.sendButton.disabled = busy;
    }

    private showNotice(text: string): void {
        this.notice.hidden = false;
        this.notice.textContent = text;
    }

    private hideNotice(): void {
        this.notice.hidden = true;
        this.notice.textContent = "";
    }

    private scrollToEnd(): void {
        this.transcript.scrollTop = this.transcript.scrollHeight;
    }
}
