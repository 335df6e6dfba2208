/** Console entry point: one WebSocket, one canvas, schema-driven panels. */

import { AGENT_STATUS_COLORS } from "./colors.js";
import { acknowledge, sortIntel } from "./intel.js";
import {
  buildCancel, buildEstop, buildInvoke, buildLasso, buildLink,
  buildSketchPoint, buildSketchPolyline, defaultParams, encodeClientMsg,
  parseTacticDefs, pyFloat,
  type AgentView, type IntelMsg, type ParamValue, type Snapshot,
  type TacticDef,
} from "./protocol.js";
import { renderScene } from "./render.js";
import { ViewModel } from "./viewmodel.js";

const vm = new ViewModel();
let defs: TacticDef[] = [];
let snapshot: Snapshot | null = null;
let intel: IntelMsg[] = [];
let sketchSeq = 0;

const canvas = document.getElementById("map") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const palette = document.getElementById("palette")!;
const agentList = document.getElementById("agents")!;
const intelList = document.getElementById("intel")!;
const detail = document.getElementById("detail")!;
const toasts = document.getElementById("toasts")!;

const wsUrl = `ws://${location.hostname}:${location.port || 8700}/ws`;
const ws = new WebSocket(wsUrl);

function send(msg: Record<string, unknown>): void {
  ws.send(encodeClientMsg(msg));
}

ws.onmessage = (ev) => {
  const msg = JSON.parse(ev.data as string);
  if (msg.type === "tactic_defs") {
    defs = parseTacticDefs(msg.definitions);
    buildPalette();
  } else if (msg.type === "snapshot") {
    snapshot = msg as Snapshot;
    intel = mergeIntel(intel, snapshot.intel);
    for (const e of snapshot.events) {
      if (e.type === "error") toast(String(e.message));
    }
    refreshPanels();
  }
};

function mergeIntel(existing: IntelMsg[], incoming: IntelMsg[]): IntelMsg[] {
  // keep local acknowledgment state across snapshots (server sends raw feed)
  const acked = new Set(existing.filter((m) => m.acknowledged)
                                .map((m) => `${m.tick}|${m.text}`));
  return incoming.map((m) =>
    acked.has(`${m.tick}|${m.text}`) ? { ...m, acknowledged: true } : m);
}

// ----------------------------------------------------------- panels

function buildPalette(): void {
  palette.replaceChildren();
  for (const def of defs) {
    const btn = document.createElement("button");
    btn.textContent = def.name;
    btn.title = def.description;
    btn.onclick = () => {
      vm.tool = "place";
      vm.pending = null;
      pendingDef = def;
    };
    palette.appendChild(btn);
  }
  for (const [tool, label] of [["point", "Point"], ["polyline", "Polyline"],
                               ["lasso", "Lasso"], ["link", "Link"],
                               ["select", "Select"]] as const) {
    const btn = document.createElement("button");
    btn.textContent = label;
    btn.onclick = () => { vm.tool = tool; vm.strokeBuffer = []; };
    palette.appendChild(btn);
  }
  const estop = document.createElement("button");
  estop.textContent = "E-STOP";
  estop.className = "estop";
  estop.onclick = () => send(buildEstop());
  palette.appendChild(estop);
}

let pendingDef: TacticDef | null = null;

function refreshPanels(): void {
  if (!snapshot) return;
  agentList.replaceChildren();
  for (const a of snapshot.agents) {
    const row = document.createElement("div");
    row.className = "agent-row";
    const dot = document.createElement("span");
    dot.className = "dot";
    dot.style.background = AGENT_STATUS_COLORS[a.status] ?? "gray";
    row.append(dot, ` ${a.id} ${a.platform} ${a.status}`);
    row.onclick = () => showDetail(a);
    agentList.appendChild(row);
  }
  intelList.replaceChildren();
  sortIntel(intel).forEach((m) => {
    const row = document.createElement("div");
    row.className = m.acknowledged ? "intel read" : "intel unread";
    const link = document.createElement("a");
    link.textContent = `[P${m.priority}] ${m.text}`;
    link.href = "#";
    link.onclick = (e) => {
      e.preventDefault();
      vm.flyTo([m.location[0], m.location[1]]);
      intel = acknowledge(intel, intel.indexOf(m));
      refreshPanels();
    };
    row.appendChild(link);
    intelList.appendChild(row);
  });
}

function showDetail(a: AgentView): void {
  detail.replaceChildren();
  const lines = [
    `id: ${a.id}`, `platform: ${a.platform}`, `payload: ${a.payload}`,
    `status: ${a.status}`, `battery: ${(a.battery * 100).toFixed(0)}%`,
    `position: ${a.position.map((c) => c.toFixed(1)).join(", ")}`,
    `task: ${a.task ?? "none"}`,
  ];
  for (const line of lines) {
    const div = document.createElement("div");
    div.textContent = line;
    detail.appendChild(div);
  }
}

// ----------------------------------------------------------- popup

function openParamPopup(def: TacticDef, position: [number, number]): void {
  const popup = document.createElement("div");
  popup.className = "popup";
  const title = document.createElement("h3");
  title.textContent = def.name;
  popup.appendChild(title);
  const inputs = new Map<string, HTMLInputElement>();
  for (const p of def.params) {
    const row = document.createElement("label");
    row.textContent = p.name;
    row.title = p.description;
    const input = document.createElement("input");
    if (p.dtype === "bool") {
      input.type = "checkbox";
      input.checked = Boolean(p.default);
    } else {
      input.value = String(p.default);
    }
    inputs.set(p.name, input);
    row.appendChild(input);
    popup.appendChild(row);
  }
  const submit = document.createElement("button");
  submit.textContent = "Invoke";
  submit.onclick = () => {
    const params: Record<string, ParamValue> = {};
    for (const p of def.params) {
      const input = inputs.get(p.name)!;
      if (p.dtype === "bool") params[p.name] = input.checked;
      else if (p.dtype === "int") params[p.name] = parseInt(input.value, 10);
      else if (p.dtype === "float") params[p.name] = pyFloat(parseFloat(input.value));
      else params[p.name] = input.value;
    }
    send(buildInvoke(def, vm.pending!.position, params));
    vm.pending = null;
    popup.remove();
  };
  const close = document.createElement("button");
  close.textContent = "Close";
  close.onclick = () => { vm.pending = null; popup.remove(); }; // no message
  popup.append(submit, close);
  document.body.appendChild(popup);
  vm.pending = { def, position, params: defaultParams(def) };
}

function toast(message: string): void {
  const div = document.createElement("div");
  div.className = "toast";
  div.textContent = message;
  toasts.appendChild(div);
  setTimeout(() => div.remove(), 4000);
}

// ----------------------------------------------------------- map input

let dragging = false;
let dragLast: [number, number] = [0, 0];

canvas.onmousedown = (e) => {
  const screen: [number, number] = [e.offsetX, e.offsetY];
  const world = vm.screenToWorld(screen);
  if (vm.tool === "select") {
    dragging = true;
    dragLast = screen;
  } else if (vm.tool === "place" && pendingDef) {
    openParamPopup(pendingDef, world);
  } else if (vm.pending) {
    vm.pending.position = world; // drag the icon before submission
  } else if (vm.tool === "point") {
    send(buildSketchPoint(`s${sketchSeq++}`, "poi", world));
  } else if (vm.tool === "polyline" || vm.tool === "lasso") {
    vm.strokeBuffer.push(world);
  } else if (vm.tool === "link") {
    const hit = nearestTactic(world);
    if (!hit) return;
    if (vm.linkParent === null) vm.linkParent = hit;
    else {
      send(buildLink(vm.linkParent, hit));
      vm.linkParent = null;
    }
  }
};

canvas.onmousemove = (e) => {
  if (!dragging) return;
  vm.panBy(e.offsetX - dragLast[0], e.offsetY - dragLast[1]);
  dragLast = [e.offsetX, e.offsetY];
};

canvas.onmouseup = () => { dragging = false; };

canvas.ondblclick = () => {
  if (vm.tool === "polyline" && vm.strokeBuffer.length >= 2) {
    send(buildSketchPolyline(`s${sketchSeq++}`, "route",
                             vm.strokeBuffer, false));
  } else if (vm.tool === "lasso" && vm.strokeBuffer.length >= 3) {
    send(buildLasso(vm.strokeBuffer));
  }
  vm.strokeBuffer = [];
};

canvas.onwheel = (e) => {
  e.preventDefault();
  vm.zoomAt([e.offsetX, e.offsetY], e.deltaY < 0 ? 1.2 : 1 / 1.2);
};

canvas.oncontextmenu = (e) => {
  e.preventDefault();
  const hit = nearestTactic(vm.screenToWorld([e.offsetX, e.offsetY]));
  if (hit) send(buildCancel(hit));
};

function nearestTactic(world: [number, number]): string | null {
  if (!snapshot) return null;
  let best: string | null = null;
  let bestD = 5; // meters
  for (const t of snapshot.tactics) {
    const d = Math.hypot(t.position[0] - world[0], t.position[1] - world[1]);
    if (d < bestD) { bestD = d; best = t.id; }
  }
  return best;
}

// ----------------------------------------------------------- frame loop

function frame(): void {
  vm.viewportW = canvas.width = canvas.clientWidth;
  vm.viewportH = canvas.height = canvas.clientHeight;
  if (snapshot) renderScene(ctx, snapshot, vm);
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
