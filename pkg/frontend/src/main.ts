import { ApiClient, ApiError } from "./api.js";
import { applyOptimistic, commitServerLink } from "./links.js";
import type { BnVariableJson, LinkRow } from "./types.js";
import { renderBanner, renderLinks, renderWhatIf, renderWorksheet } from "./views.js";
import { WhatIfPanel } from "./whatif.js";

const api = new ApiClient();

const viewRoot = document.getElementById("view") as HTMLDivElement;
const tabBar = document.getElementById("tabs") as HTMLDivElement;
const levelBar = document.getElementById("levels") as HTMLDivElement;

type View = "worksheets" | "links" | "whatif";

let currentView: View = "worksheets";
let levelRanks: number[] = [];
let currentLevel = 1;
let sessionVersion = 0;
let links: LinkRow[] = [];
let variables: BnVariableJson[] = [];

const panel = new WhatIfPanel(api, () => {
  if (currentView === "whatif") {
    renderWhatIf(viewRoot, variables, panel.state, whatIfHandlers);
  }
});

const whatIfHandlers = {
  onTarget: (id: string) => void panel.setTarget(id),
  onEvidence: (id: string, value: string | null) => void panel.toggleEvidence(id, value),
};

function noteVersion(version: number): void {
  sessionVersion = Math.max(sessionVersion, version);
  panel.noteVersion(version);
}

function renderTabs(): void {
  tabBar.innerHTML = "";
  const labels: [View, string][] = [
    ["worksheets", "Worksheets"],
    ["links", "Links"],
    ["whatif", "What-if"],
  ];
  for (const [view, label] of labels) {
    const button = document.createElement("button");
    button.textContent = label;
    button.className = view === currentView ? "tab active" : "tab";
    button.onclick = () => {
      currentView = view;
      void show();
    };
    tabBar.appendChild(button);
  }
  levelBar.style.display = currentView === "worksheets" ? "" : "none";
  if (currentView === "worksheets") {
    levelBar.innerHTML = "";
    for (const rank of levelRanks) {
      const button = document.createElement("button");
      button.textContent = `Level ${rank}`;
      button.className = rank === currentLevel ? "tab active" : "tab";
      button.onclick = () => {
        currentLevel = rank;
        void show();
      };
      levelBar.appendChild(button);
    }
  }
}

async function showWorksheets(): Promise<void> {
  const sheet = await api.getWorksheet(currentLevel);
  noteVersion(sheet.version);
  renderWorksheet(viewRoot, sheet);
}

async function showLinks(): Promise<void> {
  const body = await api.getLinks();
  noteVersion(body.version);
  links = body.links;
  renderLinks(viewRoot, links, onLinkDecision);
}

function onLinkDecision(id: string, status: "confirmed" | "rejected" | "candidate"): void {
  const update = applyOptimistic(links, id, status);
  links = update.links;
  renderLinks(viewRoot, links, onLinkDecision);
  api
    .setLinkStatus(id, status)
    .then((resp) => {
      noteVersion(resp.version);
      links = commitServerLink(links, resp.link);
      renderLinks(viewRoot, links, onLinkDecision);
    })
    .catch((error) => {
      links = update.rollback; // server said no: undo the optimistic flip
      renderLinks(viewRoot, links, onLinkDecision);
      if (error instanceof ApiError && error.status === 404) {
        void showLinks(); // stale id: refresh the whole list
      }
    });
}

async function showWhatIf(): Promise<void> {
  const body = await api.getBn();
  noteVersion(body.version);
  if (!body.bn || !body.complete) {
    renderBanner(
      viewRoot,
      body.detail ?? "skeleton incomplete — fill CPTs (start the service with --bn)",
    );
    return;
  }
  variables = body.bn.variables;
  renderWhatIf(viewRoot, variables, panel.state, whatIfHandlers);
}

async function show(): Promise<void> {
  renderTabs();
  try {
    if (currentView === "worksheets") await showWorksheets();
    else if (currentView === "links") await showLinks();
    else await showWhatIf();
  } catch (error) {
    const message =
      error instanceof ApiError ? error.detail : "analysis service unreachable";
    renderBanner(viewRoot, message);
  }
}

async function boot(): Promise<void> {
  try {
    const body = await api.getStudy();
    noteVersion(body.version);
    levelRanks = body.study.levels.map((lv) => lv.rank).sort((a, b) => a - b);
    currentLevel = levelRanks[0] ?? 1;
    const title = document.getElementById("study-name");
    if (title) title.textContent = body.study.levels.map((lv) => lv.name).join(" / ");
  } catch (error) {
    renderBanner(
      viewRoot,
      error instanceof ApiError ? error.detail : "analysis service unreachable",
    );
    return;
  }
  await show();
}

void boot();
