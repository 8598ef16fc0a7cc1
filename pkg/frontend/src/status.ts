// Health/metrics side panel. Polls the service, pauses while the tab is
// hidden, and shows offline/degraded banners instead of raw errors.

import { ApiClient } from "./api.js";

export class StatusPanel {
    private api: ApiClient;
    private root: HTMLElement;
    private banner: HTMLElement;
    private counters: HTMLElement;
    private latency: HTMLElement;
    private energy: HTMLElement;
    private timer: ReturnType<typeof setInterval> | null = null;
    private intervalMs: number;

    constructor(root: HTMLElement, api: ApiClient, intervalMs = 5000) {
        this.api = api;
        this.root = root;
        this.intervalMs = intervalMs;

        const heading = document.createElement("h2");
        heading.textContent = "Service status";

        this.banner = document.createElement("div");
        this.banner.className = "status-banner";
        this.banner.setAttribute("role", "status");
        this.banner.hidden = true;

        this.counters = document.createElement("dl");
        this.counters.className = "status-counters";
        this.latency = document.createElement("p");
        this.latency.className = "status-latency";
        this.energy = document.createElement("p");
        this.energy.className = "status-energy";

        root.append(heading, this.banner, this.counters, this.latency, this.energy);
        document.addEventListener("visibilitychange", () => {
            if (document.hidden) this.stop();
            else this.start();
        });
    }

    start(): void {
        if (this.timer !== null) return;
        void this.refresh();
        this.timer = setInterval(() => void this.refresh(), this.intervalMs);
    }

    stop(): void {
        if (this.timer !== null) {
            clearInterval(this.timer);
            this.timer = null;
        }
    }

    async refresh(): Promise<void> {
        try {
            const [health, metrics] = await Promise.all([this.api.health(), this.api.metrics()]);
            this.renderCounters(metrics.requests_by_route);
            const mean = metrics.latency_mean_s;
            const p95 = metrics.latency_p95_s;
            this.latency.textContent =
                mean === null || p95 === null
                    ? "Latency: no requests yet"
                    : `Latency: mean ${(mean * 1000).toFixed(1)} ms, p95 ${(p95 * 1000).toFixed(1)} ms`;
            this.energy.textContent = metrics.energy
                ? `Energy: ${metrics.energy.mwh_per_request.toFixed(2)} mWh/request`
                : "Energy: no sampler attached";
            if (metrics.degraded > 0) {
                this.showBanner(`Reduced service: ${metrics.degraded} degraded replies`, "degraded");
            } else if (!health.config_frozen || !health.fingerprint_match) {
                this.showBanner("Configuration problem: service refusing to route", "offline");
            } else {
                this.banner.hidden = true;
            }
        } catch {
            this.showBanner("Service offline", "offline");
        }
    }

    private renderCounters(byRoute: { clinical: number; casual: number; blocked: number }): void {
        this.counters.textContent = "";
        for (const [name, value] of Object.entries(byRoute)) {
            const term = document.createElement("dt");
            term.textContent = name;
            const datum = document.createElement("dd");
            datum.textContent = String(value);
            datum.dataset.route = name;
            this.counters.append(term, datum);
        }
    }

    private showBanner(text: string, kind: "offline" | "degraded"): void {
        this.banner.hidden = false;
        this.banner.textContent = text;
        this.banner.dataset.kind = kind;
    }
}
