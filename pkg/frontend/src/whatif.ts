// What-if panel state: the chosen target, the evidence assignments, the
// posterior currently on display and the query history. The displayed
// posterior always corresponds to the evidence set shown: responses are
// discarded when a newer request is in flight, when their echoed evidence
// no longer matches, or when they carry an older session version.

import { ApiError } from "./api.js";
import type { QueryResponse } from "./types.js";

export interface HistoryEntry {
  target: string;
  evidence: Record<string, string>;
  rendered: Record<string, string>;
}

export interface WhatIfState {
  target: string | null;
  evidence: Record<string, string>;
  posterior: Record<string, number> | null;
  rendered: Record<string, string> | null;
  history: HistoryEntry[];
  notice: string | null;
  lastVersion: number;
}

export function initialWhatIf(): WhatIfState {
  return {
    target: null,
    evidence: {},
    posterior: null,
    rendered: null,
    history: [],
    notice: null,
    lastVersion: 0,
  };
}

export function withTarget(state: WhatIfState, target: string): WhatIfState {
  const evidence = { ...state.evidence };
  delete evidence[target]; // a variable cannot be both target and evidence
  return { ...state, target, evidence, posterior: null, rendered: null, notice: null };
}

/** Set one evidence assignment, or clear it by passing null. */
export function withEvidenceToggled(
  state: WhatIfState,
  variable: string,
  value: string | null,
): WhatIfState {
  const evidence = { ...state.evidence };
  if (value === null) {
    delete evidence[variable];
  } else {
    evidence[variable] = value;
  }
  return { ...state, evidence, notice: null };
}

function sameEvidence(a: Record<string, string>, b: Record<string, string>): boolean {
  const ka = Object.keys(a);
  const kb = Object.keys(b);
  return ka.length === kb.length && ka.every((k) => a[k] === b[k]);
}

/** Returns the next state, or null when the response must be discarded. */
export function applyQueryResponse(state: WhatIfState, resp: QueryResponse): WhatIfState | null {
  if (resp.version < state.lastVersion) return null; // stale session state
  if (resp.target !== state.target) return null;
  if (!sameEvidence(resp.evidence, state.evidence)) return null;
  return {
    ...state,
    posterior: resp.posterior,
    rendered: resp.posterior_rendered,
    notice: null,
    lastVersion: Math.max(state.lastVersion, resp.version),
    history: [
      ...state.history,
      { target: resp.target, evidence: { ...resp.evidence }, rendered: resp.posterior_rendered },
    ],
  };
}

export function applyQueryFailure(state: WhatIfState, error: unknown): WhatIfState {
  let notice = "query failed";
  if (error instanceof ApiError) {
    notice =
      error.status === 409
        ? "skeleton incomplete — fill CPTs before querying"
        : error.detail;
  } else if (error instanceof Error) {
    notice = error.message;
  }
  return { ...state, posterior: null, rendered: null, notice };
}

interface QueryApi {
  query(target: string, evidence: Record<string, string>): Promise<QueryResponse>;
}

/** Drives the panel: every target change or evidence toggle issues a query;
 * responses are matched to the latest request token. */
export class WhatIfPanel {
  state: WhatIfState = initialWhatIf();
  private token = 0;

  constructor(
    private api: QueryApi,
    private onChange: (state: WhatIfState) => void = () => {},
  ) {}

  noteVersion(version: number): void {
    if (version > this.state.lastVersion) {
      this.state = { ...this.state, lastVersion: version };
    }
  }

  async setTarget(target: string): Promise<void> {
    this.state = withTarget(this.state, target);
    this.onChange(this.state);
    await this.refresh();
  }

  async toggleEvidence(variable: string, value: string | null): Promise<void> {
    this.state = withEvidenceToggled(this.state, variable, value);
    this.onChange(this.state);
    await this.refresh();
  }

  private async refresh(): Promise<void> {
    if (this.state.target === null) return;
    const token = ++this.token;
    try {
      const resp = await this.api.query(this.state.target, this.state.evidence);
      if (token !== this.token) return; // superseded by a newer request
      const next = applyQueryResponse(this.state, resp);
      if (next === null) return;
      this.state = next;
    } catch (error) {
      if (token !== this.token) return;
      this.state = applyQueryFailure(this.state, error);
    }
    this.onChange(this.state);
  }
}
