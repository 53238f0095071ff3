/** Typed client for the generation service.  At most one generation
 * request is in flight; a newer one aborts and replaces the older. */

import {
  Catalog,
  EvaluateResponse,
  GenerateResponse,
  ModelInfo,
  Obstruction,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface GenerateRequest {
  obstructions: Obstruction[];
  count: number;
  seed: number;
  guidance: { heightmap: number[][]; lambda: number } | null;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function parse<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (typeof body?.detail === "string") detail = body.detail;
    } catch {
      // keep the status text
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export class ApiClient {
  private inflight: AbortController | null = null;

  constructor(
    readonly base: string = "",
    private readonly fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  catalog(): Promise<Catalog> {
    return this.fetchFn(`${this.base}/api/boundary-conditions`).then((r) =>
      parse<Catalog>(r),
    );
  }

  modelInfo(): Promise<ModelInfo> {
    return this.fetchFn(`${this.base}/api/model/info`).then((r) =>
      parse<ModelInfo>(r),
    );
  }

  evaluate(
    heightmap: number[][],
    obstructions: Obstruction[],
  ): Promise<EvaluateResponse> {
    return this.fetchFn(`${this.base}/api/evaluate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ heightmap, bc: { obstructions } }),
    }).then((r) => parse<EvaluateResponse>(r));
  }

  /** Start a generation, aborting any one still running.  The superseded
   * call rejects with an AbortError-named error. */
  generate(req: GenerateRequest): Promise<GenerateResponse> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const body: Record<string, unknown> = {
      bc: { obstructions: req.obstructions },
      count: req.count,
      seed: req.seed,
    };
    if (req.guidance !== null) body.guidance = req.guidance;
    return this.fetchFn(`${this.base}/api/generate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
      signal: controller.signal,
    })
      .then((r) => parse<GenerateResponse>(r))
      .finally(() => {
        if (this.inflight === controller) this.inflight = null;
      });
  }

  get busy(): boolean {
    return this.inflight !== null;
  }
}

export function isAbort(err: unknown): boolean {
  return err instanceof Error && err.name === "AbortError";
}
