import { describe, expect, it } from "vitest";

import { barWidthPercent, renderEvidence } from "../src/format.js";

describe("presentation helpers", () => {
  it("scales bar widths from raw floats", () => {
    expect(barWidthPercent(1.0)).toBe(100);
    expect(barWidthPercent(0.0)).toBe(0);
    expect(barWidthPercent(0.6629)).toBeCloseTo(66.3, 5);
  });

  it("clamps out-of-range values", () => {
    expect(barWidthPercent(1.7)).toBe(100);
    expect(barWidthPercent(-0.2)).toBe(0);
  });

  it("renders evidence sets compactly", () => {
    expect(renderEvidence({})).toBe("(no evidence)");
    expect(renderEvidence({ "M2.a": "present" })).toBe("M2.a=present");
  });
});
