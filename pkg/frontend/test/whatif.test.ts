import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import type { QueryResponse } from "../src/types.js";
import {
  WhatIfPanel,
  applyQueryFailure,
  applyQueryResponse,
  initialWhatIf,
  withEvidenceToggled,
  withTarget,
} from "../src/whatif.js";

// Response bodies exactly as the analysis service emits them for the shipped
// example net: a root threat queried with no evidence reads 1.000000.
const ROOT_NO_EVIDENCE: QueryResponse = {
  version: 1,
  target: "T2.1",
  evidence: {},
  posterior: { present: 1.0, absent: 0.0 },
  posterior_rendered: { present: "1.000000", absent: "0.000000" },
};

const WITH_EVIDENCE: QueryResponse = {
  version: 1,
  target: "T2.1",
  evidence: { "M2.a": "present" },
  posterior: { present: 1.0, absent: 0.0 },
  posterior_rendered: { present: "1.000000", absent: "0.000000" },
};

function fakeApi(log: string[] = []) {
  return {
    async query(target: string, evidence: Record<string, string>): Promise<QueryResponse> {
      log.push(`${target}|${JSON.stringify(evidence)}`);
      const body = Object.keys(evidence).length === 0 ? ROOT_NO_EVIDENCE : WITH_EVIDENCE;
      return { ...body, target, evidence: { ...evidence } };
    },
  };
}

describe("what-if panel", () => {
  it("shows 1.000000 for a root threat with no evidence, straight from the body", async () => {
    const panel = new WhatIfPanel(fakeApi());
    await panel.setTarget("T2.1");
    expect(panel.state.rendered).not.toBeNull();
    expect(panel.state.rendered!["present"]).toBe("1.000000");
    expect(panel.state.posterior!["present"]).toBe(1.0);
  });

  it("toggling evidence on and off restores the original display", async () => {
    const log: string[] = [];
    const panel = new WhatIfPanel(fakeApi(log));
    await panel.setTarget("T2.1");
    const initial = panel.state.rendered;
    await panel.toggleEvidence("M2.a", "present");
    expect(panel.state.evidence).toEqual({ "M2.a": "present" });
    await panel.toggleEvidence("M2.a", null);
    expect(panel.state.evidence).toEqual({});
    expect(panel.state.rendered).toEqual(initial);
    expect(log).toHaveLength(3); // every toggle issued a query
  });

  it("appends one history entry per applied response", async () => {
    const panel = new WhatIfPanel(fakeApi());
    await panel.setTarget("T2.1");
    await panel.toggleEvidence("M2.a", "present");
    await panel.toggleEvidence("M2.a", null);
    expect(panel.state.history).toHaveLength(3);
    expect(panel.state.history[1].evidence).toEqual({ "M2.a": "present" });
  });

  it("discards responses older than the session version", () => {
    let state = initialWhatIf();
    state = withTarget(state, "T2.1");
    state = { ...state, lastVersion: 5 };
    const stale = { ...ROOT_NO_EVIDENCE, version: 3 };
    expect(applyQueryResponse(state, stale)).toBeNull();
    const fresh = { ...ROOT_NO_EVIDENCE, version: 6 };
    const next = applyQueryResponse(state, fresh);
    expect(next).not.toBeNull();
    expect(next!.lastVersion).toBe(6);
  });

  it("discards responses whose evidence no longer matches the panel", () => {
    let state = initialWhatIf();
    state = withTarget(state, "T2.1");
    state = withEvidenceToggled(state, "M2.a", "present");
    expect(applyQueryResponse(state, ROOT_NO_EVIDENCE)).toBeNull();
  });

  it("matches in-flight responses to the latest request", async () => {
    let release: (body: QueryResponse) => void = () => {};
    const slowFirst = {
      calls: 0,
      async query(target: string, evidence: Record<string, string>): Promise<QueryResponse> {
        this.calls += 1;
        if (this.calls === 1) {
          return new Promise((resolve) => {
            release = (body) => resolve({ ...body, target, evidence: { ...evidence } });
          });
        }
        return { ...WITH_EVIDENCE, target, evidence: { ...evidence } };
      },
    };
    const panel = new WhatIfPanel(slowFirst);
    const first = panel.setTarget("T2.1"); // hangs until released
    await panel.toggleEvidence("M2.a", "present"); // second query wins
    const after = panel.state.rendered;
    release(ROOT_NO_EVIDENCE); // stale response arrives late
    await first;
    expect(panel.state.rendered).toEqual(after);
    expect(panel.state.evidence).toEqual({ "M2.a": "present" });
  });

  it("renders the CPT notice on 409", () => {
    let state = initialWhatIf();
    state = withTarget(state, "T2.1");
    const next = applyQueryFailure(state, new ApiError(409, "skeleton incomplete: fill CPTs"));
    expect(next.notice).toContain("skeleton incomplete");
    expect(next.rendered).toBeNull();
  });

  it("clearing the target variable from evidence when targeted", () => {
    let state = initialWhatIf();
    state = withEvidenceToggled(state, "C2.a", "present");
    state = withTarget(state, "C2.a");
    expect(state.evidence).toEqual({});
  });
});
