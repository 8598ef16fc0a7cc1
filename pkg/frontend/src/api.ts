// Typed client for the local routing service. Everything the UI knows about
// the wire format lives here.

export type Route = "clinical" | "casual" | "blocked";

export interface ChatResponse {
    route: Route;
    reply: string;
    matched_question: string | null;
    score: number | null;
    latency_ms: number;
    degraded: boolean;
}

export interface HealthResponse {
    status: string;
    index_entries: number;
    dim: number;
    config_frozen: boolean;
    fingerprint_match: boolean;
    smalltalk_backend: string;
}

export interface MetricsResponse {
    requests_by_route: { clinical: number; casual: number; blocked: number };
    throttled: number;
    degraded: number;
    latency_mean_s: number | null;
    latency_p95_s: number | null;
    audit_write_errors: number;
    energy: { mwh_per_request: number; total_wh: number } | null;
}

export class RateLimitedError extends Error {
    retryAfterS: number;

    constructor(retryAfterS: number) {
        super(`rate limited; retry after ${retryAfterS}s`);
        this.retryAfterS = retryAfterS;
    }
}

export class ServiceUnavailableError extends Error {}

export class ApiClient {
    baseUrl: string;

    constructor(baseUrl: string = "") {
        this.baseUrl = baseUrl.replace(/\/$/, "");
    }

    async chat(sessionId: string, text: string): Promise<ChatResponse> {
        let response: Response;
        try {
            response = await fetch(`${this.baseUrl}/v1/chat`, {
                method: "POST",
                headers: { "Content-Type": "application/json" },
                body: JSON.stringify({ session_id: sessionId, text }),
            });
        } catch {
            throw new ServiceUnavailableError("service unreachable");
        }
        if (response.status === 429) {
            const retryAfter = parseFloat(response.headers.get("Retry-After") ?? "1");
            throw new RateLimitedError(Number.isFinite(retryAfter) ? retryAfter : 1);
        }
        if (!response.ok) {
            throw new ServiceUnavailableError(`service replied ${response.status}`);
        }
        return (await response.json()) as ChatResponse;
    }

    async health(): Promise<HealthResponse> {
        const response = await fetch(`${this.baseUrl}/v1/health`);
        if (!response.ok) throw new ServiceUnavailableError(`health ${response.status}`);
        return (await response.json()) as HealthResponse;
    }

    async metrics(): Promise<MetricsResponse> {
        const response = await fetch(`${this.baseUrl}/v1/metrics`);
        if (!response.ok) throw new ServiceUnavailableError(`metrics ${response.status}`);
        return (await response.json()) as MetricsResponse;
    }
}

export function newSessionId(): string {
    if (typeof crypto !== "undefined" && "randomUUID" in crypto) {
        return crypto.randomUUID();
    }
    return `session-${Date.now()}-${Math.floor(Math.random() * 1e9)}`;
}
