// Typed client for the draftrank ranking/draft service. Field names mirror
// the JSON wire format (lower_snake_case). The UI never computes scores:
// everything it displays comes back from these calls.

export type RankedCard = {
  card_id: number;
  name: string;
  score: number;
};

export type PoolCard = {
  card_id: number;
  name: string;
};

export type TranscriptRow = {
  seat: number;
  pick_number: number;
  pack: string[];
  pool: string[];
  picked: string;
};

export type SessionView = {
  session_id: string;
  round: number;
  pick_number: number;
  picks_made: number;
  pool: PoolCard[];
  pack: RankedCard[]; // descending score order, straight from the service
  finished: boolean;
  checkpoint_id: string;
  final_pools?: PoolCard[][];
  transcript?: TranscriptRow[];
};

export type RankResponse = {
  ranking: RankedCard[];
  checkpoint_id: string;
};

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    public baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, body?: unknown): Promise<T> {
    const init: RequestInit =
      body === undefined
        ? {}
        : {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(body),
          };
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(response.status, String((payload as any).detail ?? response.statusText));
    }
    return payload as T;
  }

  health(): Promise<{ status: string; model_loaded: boolean; checkpoint_id: string }> {
    return this.request("/health");
  }

  rank(pool: Array<number | string>, pack: Array<number | string>): Promise<RankResponse> {
    return this.request("/rank", { pool, pack });
  }

  newDraft(players: number, seed: number, humanSeat = 0): Promise<SessionView> {
    return this.request("/draft/new", { players, seed, human_seat: humanSeat });
  }

  pick(sessionId: string, card: number | string): Promise<SessionView> {
    return this.request(`/draft/${sessionId}/pick`, { card });
  }

  state(sessionId: string): Promise<SessionView> {
    return this.request(`/draft/${sessionId}/state`);
  }
}
