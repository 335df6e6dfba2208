/** Intelligence message list: unread first, ordered by priority. */

import type { IntelMsg } from "./protocol.js";

/**
 * Display order: unacknowledged before acknowledged, then ascending priority
 * number (0 is most urgent), then recency (newest first).
 */
export function sortIntel(messages: IntelMsg[]): IntelMsg[] {
  return [...messages].sort((a, b) => {
    if (a.acknowledged !== b.acknowledged) return a.acknowledged ? 1 : -1;
    if (a.priority !== b.priority) return a.priority - b.priority;
    return b.tick - a.tick;
  });
}

export function acknowledge(messages: IntelMsg[], index: number): IntelMsg[] {
  return messages.map((m, i) =>
    i === index ? { ...m, acknowledged: true } : m);
}
