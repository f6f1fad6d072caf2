// DOM rendering. All logic lives in whatif.ts / links.ts; these functions
// only turn state into elements.

import { barWidthPercent, renderEvidence } from "./format.js";
import type { BnVariableJson, LinkRow, WorksheetResponse } from "./types.js";
import type { WhatIfState } from "./whatif.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderBanner(root: HTMLElement, message: string): void {
  root.innerHTML = "";
  root.appendChild(el("div", "banner error", message));
}

export function renderWorksheet(root: HTMLElement, sheet: WorksheetResponse): void {
  root.innerHTML = "";
  const table = el("table", "worksheet");
  const head = el("tr");
  const elementHeader = sheet.level_rank === 1 ? "Hazard" : "Latent-hazard & Threat";
  for (const column of ["Node", "Deviation", elementHeader, "Cause", "Mitigation"]) {
    head.appendChild(el("th", undefined, column));
  }
  table.appendChild(head);
  for (const row of sheet.rows) {
    const tr = el("tr");
    for (const cell of [row.node, row.deviation, row.element, row.cause, row.mitigation]) {
      tr.appendChild(el("td", undefined, cell));
    }
    table.appendChild(tr);
  }
  root.appendChild(table);
}

export function renderLinks(
  root: HTMLElement,
  links: LinkRow[],
  onDecision: (id: string, status: "confirmed" | "rejected" | "candidate") => void,
): void {
  root.innerHTML = "";
  if (links.length === 0) {
    root.appendChild(el("p", "muted", "No candidate links."));
    return;
  }
  for (const link of links) {
    const card = el("div", "link-card");
    const header = el("div", "link-header");
    header.appendChild(el("span", "link-rule", link.rule));
    header.appendChild(el("span", `chip ${link.status}`, link.status));
    card.appendChild(header);
    for (const endpoint of link.endpoints) {
      card.appendChild(el("div", "endpoint", endpoint.text));
    }
    card.appendChild(el("div", "justification", link.justification));
    const controls = el("div", "controls");
    const confirm = el("button", "confirm", "Confirm");
    confirm.onclick = () => onDecision(link.id, "confirmed");
    const reject = el("button", "reject", "Reject");
    reject.onclick = () => onDecision(link.id, "rejected");
    const reset = el("button", undefined, "Reset");
    reset.onclick = () => onDecision(link.id, "candidate");
    controls.append(confirm, reject, reset);
    card.appendChild(controls);
    root.appendChild(card);
  }
}

export function renderWhatIf(
  root: HTMLElement,
  variables: BnVariableJson[],
  state: WhatIfState,
  handlers: {
    onTarget: (id: string) => void;
    onEvidence: (id: string, value: string | null) => void;
  },
): void {
  root.innerHTML = "";

  const targetRow = el("div", "field");
  targetRow.appendChild(el("label", undefined, "Target variable"));
  const select = el("select");
  const placeholder = el("option", undefined, "choose…");
  placeholder.value = "";
  select.appendChild(placeholder);
  for (const variable of variables) {
    const option = el("option", undefined, variable.title ? `${variable.id} (${variable.title})` : variable.id);
    option.value = variable.id;
    if (state.target === variable.id) option.selected = true;
    select.appendChild(option);
  }
  select.onchange = () => {
    if (select.value) handlers.onTarget(select.value);
  };
  targetRow.appendChild(select);
  root.appendChild(targetRow);

  const evidenceBox = el("div", "evidence");
  evidenceBox.appendChild(el("h3", undefined, "Evidence"));
  for (const variable of variables) {
    if (variable.id === state.target) continue;
    const row = el("div", "evidence-row");
    row.appendChild(el("span", "var-name", variable.id));
    const group = el("span", "toggle-group");
    const noneBtn = el("button", state.evidence[variable.id] === undefined ? "active" : "", "unobserved");
    noneBtn.onclick = () => handlers.onEvidence(variable.id, null);
    group.appendChild(noneBtn);
    for (const stateName of variable.states) {
      const btn = el("button", state.evidence[variable.id] === stateName ? "active" : "", stateName);
      btn.onclick = () => handlers.onEvidence(variable.id, stateName);
      group.appendChild(btn);
    }
    row.appendChild(group);
    evidenceBox.appendChild(row);
  }
  root.appendChild(evidenceBox);

  if (state.notice) {
    root.appendChild(el("div", "banner warn", state.notice));
  }

  const bars = el("div", "bars");
  bars.appendChild(el("h3", undefined, "Posterior"));
  if (state.rendered && state.posterior) {
    for (const [stateName, label] of Object.entries(state.rendered)) {
      const row = el("div", "bar-row");
      row.appendChild(el("span", "bar-state", stateName));
      const track = el("div", "bar-track");
      const fill = el("div", "bar-fill");
      fill.style.width = `${barWidthPercent(state.posterior[stateName] ?? 0)}%`;
      track.appendChild(fill);
      row.appendChild(track);
      row.appendChild(el("span", "bar-label", label));
      bars.appendChild(row);
    }
  } else if (!state.notice) {
    bars.appendChild(el("p", "muted", "Pick a target to query."));
  }
  root.appendChild(bars);

  const history = el("div", "history");
  history.appendChild(el("h3", undefined, "History"));
  for (const entry of [...state.history].reverse()) {
    const text = Object.entries(entry.rendered)
      .map(([s, v]) => `${s}=${v}`)
      .join(", ");
    history.appendChild(
      el("div", "history-row", `${entry.target} | ${renderEvidence(entry.evidence)} → ${text}`),
    );
  }
  root.appendChild(history);
}
