// Link-review state: confirm/reject applies optimistically and rolls back
// when the service rejects the update.

import type { LinkRow, LinkStatus } from "./types.js";

export interface OptimisticUpdate {
  links: LinkRow[];
  rollback: LinkRow[];
}

export function applyOptimistic(
  links: LinkRow[],
  id: string,
  status: LinkStatus,
): OptimisticUpdate {
  const rollback = links;
  const updated = links.map((link) => (link.id === id ? { ...link, status } : link));
  return { links: updated, rollback };
}

export function commitServerLink(links: LinkRow[], row: LinkRow): LinkRow[] {
  return links.map((link) => (link.id === row.id ? row : link));
}
