// Presentation helpers. Displayed probability NUMBERS always come from the
// service's posterior_rendered strings; the client never formats or derives
// probabilities itself. Raw floats are used only to scale bar widths.

export function barWidthPercent(p: number): number {
  const clamped = Math.max(0, Math.min(1, p));
  return Math.round(clamped * 1000) / 10;
}

export function renderEvidence(evidence: Record<string, string>): string {
  const parts = Object.entries(evidence).map(([k, v]) => `${k}=${v}`);
  return parts.length ? parts.join(", ") : "(no evidence)";
}
