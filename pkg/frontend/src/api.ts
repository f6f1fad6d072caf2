import type {
  BnResponse,
  LinkStatusResponse,
  LinksResponse,
  QueryResponse,
  StudyResponse,
  WorksheetResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client; the fetch implementation is injectable for tests. */
export class ApiClient {
  constructor(
    private base: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.base + path, init);
    const text = await resp.text();
    let payload: unknown = null;
    try {
      payload = text ? JSON.parse(text) : null;
    } catch {
      payload = null;
    }
    if (!resp.ok) {
      const detail =
        payload && typeof payload === "object" && "detail" in payload
          ? String((payload as { detail: unknown }).detail)
          : text || resp.statusText;
      throw new ApiError(resp.status, detail);
    }
    return payload as T;
  }

  getStudy(): Promise<StudyResponse> {
    return this.request("GET", "/api/study");
  }

  getWorksheet(rank: number): Promise<WorksheetResponse> {
    return this.request("GET", `/api/levels/${rank}/worksheet`);
  }

  getLinks(): Promise<LinksResponse> {
    return this.request("GET", "/api/links");
  }

  setLinkStatus(id: string, status: string, direction?: string): Promise<LinkStatusResponse> {
    const body: Record<string, string> = { status };
    if (direction) body.direction = direction;
    return this.request("POST", `/api/links/${id}/status`, body);
  }

  getBn(): Promise<BnResponse> {
    return this.request("GET", "/api/bn");
  }

  query(target: string, evidence: Record<string, string>): Promise<QueryResponse> {
    return this.request("POST", "/api/bn/query", { target, evidence });
  }
}
