/**
 * Client side of the mission-server JSON/WebSocket protocol.
 *
 * Outbound messages use the canonical encoding (sorted keys, compact
 * separators, ASCII-escaped strings) so that any conforming client produces
 * byte-identical messages for identical operations. Numeric parameters whose
 * schema dtype is `float` are tagged with {@link pyFloat} so integral values
 * still serialize with a decimal point (`10.0`, not `10`).
 */

/** A number that must serialize as a float (decimal point preserved). */
export class PyFloat {
  constructor(readonly value: number) {}
}

export function pyFloat(value: number): PyFloat {
  return new PyFloat(value);
}

function escapeString(s: string): string {
  const short: Record<string, string> = {
    '"': '\\"', "\\": "\\\\", "\b": "\\b", "\t": "\\t",
    "\n": "\\n", "\f": "\\f", "\r": "\\r",
  };
  let out = '"';
  for (let i = 0; i < s.length; i++) {
    const ch = s[i];
    const code = s.charCodeAt(i);
    if (short[ch] !== undefined) out += short[ch];
    else if (code < 0x20 || code >= 0x7f) {
      out += "\\u" + code.toString(16).padStart(4, "0");
    } else out += ch;
  }
  return out + '"';
}

function formatFloat(v: number): string {
  if (!Number.isFinite(v)) throw new Error(`non-finite float ${v}`);
  if (Object.is(v, -0)) return "-0.0";
  // shortest round-trip form, with a decimal point forced for integral values
  return Number.isInteger(v) ? v.toString() + ".0" : v.toString();
}

function encodeValue(v: unknown): string {
  if (v === null || v === undefined) return "null";
  if (v instanceof PyFloat) return formatFloat(v.value);
  if (typeof v === "boolean") return v ? "true" : "false";
  if (typeof v === "number") {
    if (!Number.isFinite(v)) throw new Error(`non-finite number ${v}`);
    return v.toString();
  }
  if (typeof v === "string") return escapeString(v);
  if (Array.isArray(v)) return "[" + v.map(encodeValue).join(",") + "]";
  if (typeof v === "object") {
    const obj = v as Record<string, unknown>;
    const parts = Object.keys(obj).sort().map(
      (k) => escapeString(k) + ":" + encodeValue(obj[k]));
    return "{" + parts.join(",") + "}";
  }
  throw new Error(`unencodable value ${String(v)}`);
}

/** Canonical client encoding: sorted keys, compact separators. */
export function encodeClientMsg(msg: Record<string, unknown>): string {
  return encodeValue(msg);
}

// ----------------------------------------------------------- tactic schemas

export interface ParamSpec {
  name: string;
  description: string;
  dtype: "float" | "int" | "bool" | "text";
  default: number | boolean | string;
}

export interface TacticDef {
  name: string;
  description: string;
  command: string;
  contextTypes: string[];
  params: ParamSpec[];
  gate: string | null;
}

type DefFields = [string, string, string, string[],
                  [string, string, ParamSpec["dtype"], ParamSpec["default"]][],
                  string | null];

/** Decode the positional definition arrays from the `tactic_defs` message. */
export function parseTacticDefs(payload: DefFields[]): TacticDef[] {
  return payload.map((f) => ({
    name: f[0], description: f[1], command: f[2], contextTypes: f[3],
    params: f[4].map((p) => ({
      name: p[0], description: p[1], dtype: p[2], default: p[3],
    })),
    gate: f[5],
  }));
}

export type ParamValue = number | boolean | string | PyFloat;

/** Schema defaults, with float-typed values tagged for canonical encoding. */
export function defaultParams(def: TacticDef): Record<string, ParamValue> {
  const out: Record<string, ParamValue> = {};
  for (const p of def.params) {
    out[p.name] = p.dtype === "float" ? pyFloat(p.default as number) : p.default;
  }
  return out;
}

// ----------------------------------------------------------- op builders

export function buildInvoke(
  def: TacticDef, position: [number, number],
  params?: Record<string, ParamValue>, selection?: string[],
): Record<string, unknown> {
  const msg: Record<string, unknown> = {
    type: "invoke",
    name: def.name,
    position: position.map(pyFloat),
    params: params ?? defaultParams(def),
  };
  if (selection !== undefined) msg.selection = selection;
  return msg;
}

export function buildLink(parent: string, child: string) {
  return { type: "link", parent, child };
}

export function buildUnlink(parent: string, child: string) {
  return { type: "unlink", parent, child };
}

export function buildCancel(instance: string) {
  return { type: "cancel", instance };
}

export function buildSketchPoint(id: string, sketchType: string,
                                 position: [number, number]) {
  return { type: "sketch", action: "add", shape: "point", id,
           sketch_type: sketchType, position: position.map(pyFloat) };
}

export function buildSketchPolyline(id: string, sketchType: string,
                                    vertices: [number, number][],
                                    closed: boolean) {
  return { type: "sketch", action: "add", shape: "polyline", id,
           sketch_type: sketchType, closed,
           vertices: vertices.map((v) => v.map(pyFloat)) };
}

export function buildSketchRemove(id: string) {
  return { type: "sketch", action: "remove", id };
}

export function buildLasso(stroke: [number, number][]) {
  return { type: "lasso", stroke: stroke.map((v) => v.map(pyFloat)) };
}

export function buildEstop() {
  return { type: "estop" };
}

// ----------------------------------------------------------- snapshot types

export interface AgentView {
  id: string;
  platform: string;
  position: number[];
  battery: number;
  status: string;
  color: string;
  task: string | null;
  payload: string;
  selected: boolean;
}

export interface TacticView {
  id: string;
  definition: string;
  status: string;
  color: string;
  position: number[];
  parents: string[];
}

export interface SketchView {
  id: string;
  type: string;
  shape: "point" | "polyline";
  position?: number[];
  closed?: boolean;
  vertices?: number[][];
}

export interface ArtifactView {
  outer_id: string;
  role: string;
  identified: boolean;
  position: number[];
}

export interface BuildingView {
  id: string;
  confirmed: boolean;
  contains_threat: boolean;
  contains_intel: boolean;
  footprint: number[][];
  height: number;
}

export interface IntelMsg {
  priority: number;
  text: string;
  location: number[];
  tick: number;
  acknowledged: boolean;
}

export interface Snapshot {
  type: "snapshot";
  tick: number;
  time: number;
  agents: AgentView[];
  tactics: TacticView[];
  sketches: SketchView[];
  artifacts: ArtifactView[];
  buildings: BuildingView[];
  intel: IntelMsg[];
  events: Record<string, unknown>[];
  coverage?: [string, number[], number, number, number, number[]];
}
