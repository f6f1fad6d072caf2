// JSON shapes of the analysis service (snake_case, one study per process).
// Every response body embeds the session version it was computed from.

export interface LevelJson {
  rank: number;
  name: string;
}

export interface StudyJson {
  levels: LevelJson[];
  guide_words: { word: string; meaning: string; provenance: string }[];
  nodes: { id: string; level_rank: number; name: string }[];
  elements: { id: string; kind: string; level_rank: number; text: string }[];
}

export interface StudyResponse {
  version: number;
  study: StudyJson;
}

export interface WorksheetRow {
  entry: number;
  node: string;
  deviation: string;
  element: string;
  cause: string;
  mitigation: string;
}

export interface WorksheetResponse {
  version: number;
  level_rank: number;
  level_name: string;
  rows: WorksheetRow[];
}

export interface LinkEndpoint {
  level_rank: number;
  entry: number;
  text: string;
}

export type LinkStatus = "candidate" | "confirmed" | "rejected";

export interface LinkRow {
  id: string;
  rule: string;
  endpoints: LinkEndpoint[];
  suggested_direction: string;
  direction: string | null;
  status: LinkStatus;
  justification: string;
}

export interface LinksResponse {
  version: number;
  links: LinkRow[];
}

export interface LinkStatusResponse {
  version: number;
  link: LinkRow;
}

export interface BnVariableJson {
  id: string;
  title: string | null;
  states: string[];
  parents: string[];
  cpt: number[][] | null;
}

export interface BnResponse {
  version: number;
  complete: boolean;
  bn: { variables: BnVariableJson[]; edges: string[][] } | null;
  detail?: string;
}

export interface QueryResponse {
  version: number;
  target: string;
  evidence: Record<string, string>;
  posterior: Record<string, number>;
  posterior_rendered: Record<string, string>;
}
