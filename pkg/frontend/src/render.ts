/** Canvas 2D scene renderer: a pure function of snapshot + view state. */

import { buildingStyle, coverageColor, TACTIC_STATUS_COLORS } from "./colors.js";
import type { Snapshot, TacticView } from "./protocol.js";
import type { ViewModel } from "./viewmodel.js";

const AIR_PLATFORMS = new Set(["UAV-quad", "VTOL"]);

export function renderScene(ctx: CanvasRenderingContext2D, snap: Snapshot,
                            vm: ViewModel): void {
  ctx.clearRect(0, 0, vm.viewportW, vm.viewportH);
  ctx.fillStyle = "#f4f1e8";
  ctx.fillRect(0, 0, vm.viewportW, vm.viewportH);

  if (vm.layers.coverage && snap.coverage) drawCoverage(ctx, snap, vm);
  drawBuildings(ctx, snap, vm);
  if (vm.layers.sketches) drawSketches(ctx, snap, vm);
  if (vm.layers.artifacts) drawArtifacts(ctx, snap, vm);
  if (vm.layers.overlays) drawTactics(ctx, snap, vm);
  if (vm.layers.agents) drawAgents(ctx, snap, vm);
  if (vm.pending) drawPending(ctx, vm);
  if (vm.strokeBuffer.length > 1) drawStroke(ctx, vm);
}

function drawCoverage(ctx: CanvasRenderingContext2D, snap: Snapshot,
                      vm: ViewModel): void {
  const [, origin, cell, w, h, values] = snap.coverage!;
  for (let row = 0; row < h; row++) {
    for (let col = 0; col < w; col++) {
      const color = coverageColor(values[row * w + col]);
      if (!color) continue;
      const [sx, sy] = vm.worldToScreen(
        [origin[0] + col * cell, origin[1] + (row + 1) * cell]);
      ctx.fillStyle = color;
      ctx.fillRect(sx, sy, cell * vm.camera.scale, cell * vm.camera.scale);
    }
  }
}

function polyPath(ctx: CanvasRenderingContext2D, vm: ViewModel,
                  vertices: number[][], close: boolean): void {
  ctx.beginPath();
  vertices.forEach((v, i) => {
    const [sx, sy] = vm.worldToScreen([v[0], v[1]]);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  if (close) ctx.closePath();
}

function drawBuildings(ctx: CanvasRenderingContext2D, snap: Snapshot,
                       vm: ViewModel): void {
  for (const b of snap.buildings) {
    const style = buildingStyle(b);
    polyPath(ctx, vm, b.footprint, true);
    ctx.fillStyle = style.tint === "red" ? "rgba(220,60,60,0.5)"
      : style.tint === "blue" ? "rgba(70,90,220,0.5)"
      : "rgba(120,120,120,0.6)";
    ctx.fill();
    if (style.checkerboard) {
      ctx.save();
      ctx.clip();
      checkerboard(ctx, vm, b.footprint);
      ctx.restore();
    }
    ctx.strokeStyle = "#333";
    ctx.stroke();
  }
}

function checkerboard(ctx: CanvasRenderingContext2D, vm: ViewModel,
                      footprint: number[][]): void {
  const xs = footprint.map((v) => v[0]);
  const ys = footprint.map((v) => v[1]);
  const step = 2; // meters
  ctx.fillStyle = "rgba(255,255,255,0.55)";
  for (let x = Math.floor(Math.min(...xs)); x < Math.max(...xs); x += step) {
    for (let y = Math.floor(Math.min(...ys)); y < Math.max(...ys); y += step) {
      if (((x / step) + (y / step)) % 2 !== 0) continue;
      const [sx, sy] = vm.worldToScreen([x, y + step]);
      ctx.fillRect(sx, sy, step * vm.camera.scale, step * vm.camera.scale);
    }
  }
}

function drawSketches(ctx: CanvasRenderingContext2D, snap: Snapshot,
                      vm: ViewModel): void {
  for (const s of snap.sketches) {
    ctx.strokeStyle = s.type === "no_go" ? "red" : "#7a5cc4";
    ctx.lineWidth = 2;
    if (s.shape === "point" && s.position) {
      const [sx, sy] = vm.worldToScreen([s.position[0], s.position[1]]);
      ctx.beginPath();
      ctx.arc(sx, sy, 5, 0, Math.PI * 2);
      ctx.stroke();
      label(ctx, s.type, sx + 7, sy);
    } else if (s.vertices) {
      polyPath(ctx, vm, s.vertices, Boolean(s.closed));
      ctx.stroke();
      const [sx, sy] = vm.worldToScreen([s.vertices[0][0], s.vertices[0][1]]);
      label(ctx, s.type, sx + 4, sy - 4);
    }
    ctx.lineWidth = 1;
  }
}

function drawArtifacts(ctx: CanvasRenderingContext2D, snap: Snapshot,
                       vm: ViewModel): void {
  for (const a of snap.artifacts) {
    const [sx, sy] = vm.worldToScreen([a.position[0], a.position[1]]);
    ctx.beginPath();
    ctx.arc(sx, sy, 4, 0, Math.PI * 2);
    // general (unidentified) icons are hollow; specific ones are filled
    if (a.identified) {
      ctx.fillStyle = a.role === "benign" ? "#888" : "#c22";
      ctx.fill();
      label(ctx, a.role, sx + 6, sy + 3);
    } else {
      ctx.strokeStyle = "#555";
      ctx.stroke();
    }
  }
}

function drawTactics(ctx: CanvasRenderingContext2D, snap: Snapshot,
                     vm: ViewModel): void {
  const byId = new Map<string, TacticView>(snap.tactics.map((t) => [t.id, t]));
  ctx.strokeStyle = "#444";
  for (const t of snap.tactics) {
    for (const pid of t.parents) {
      const parent = byId.get(pid);
      if (!parent) continue;
      polyPath(ctx, vm, [parent.position, t.position], false);
      ctx.stroke();
    }
  }
  for (const t of snap.tactics) {
    const [sx, sy] = vm.worldToScreen([t.position[0], t.position[1]]);
    diamond(ctx, sx, sy, 8, t.color);
    label(ctx, `${t.id} ${t.definition}`, sx + 10, sy - 6);
  }
}

function drawAgents(ctx: CanvasRenderingContext2D, snap: Snapshot,
                    vm: ViewModel): void {
  for (const a of snap.agents) {
    const [sx, sy] = vm.worldToScreen([a.position[0], a.position[1]]);
    ctx.fillStyle = a.color;
    ctx.beginPath();
    if (AIR_PLATFORMS.has(a.platform)) {
      ctx.moveTo(sx, sy - 5);
      ctx.lineTo(sx - 4, sy + 4);
      ctx.lineTo(sx + 4, sy + 4);
      ctx.closePath();
    } else {
      ctx.rect(sx - 4, sy - 4, 8, 8);
    }
    ctx.fill();
    if (a.selected) {
      ctx.strokeStyle = "#e6a817";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(sx, sy, 8, 0, Math.PI * 2);
      ctx.stroke();
      ctx.lineWidth = 1;
    }
  }
}

function drawPending(ctx: CanvasRenderingContext2D, vm: ViewModel): void {
  const p = vm.pending!;
  const [sx, sy] = vm.worldToScreen(p.position);
  ctx.globalAlpha = 0.6;
  diamond(ctx, sx, sy, 10, TACTIC_STATUS_COLORS.pending);
  ctx.globalAlpha = 1;
  label(ctx, p.def.name, sx + 12, sy);
}

function drawStroke(ctx: CanvasRenderingContext2D, vm: ViewModel): void {
  ctx.strokeStyle = vm.tool === "lasso" ? "#e6a817" : "#7a5cc4";
  ctx.setLineDash([4, 3]);
  polyPath(ctx, vm, vm.strokeBuffer, vm.tool === "lasso");
  ctx.stroke();
  ctx.setLineDash([]);
}

function diamond(ctx: CanvasRenderingContext2D, x: number, y: number,
                 r: number, color: string): void {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.moveTo(x, y - r);
  ctx.lineTo(x + r, y);
  ctx.lineTo(x, y + r);
  ctx.lineTo(x - r, y);
  ctx.closePath();
  ctx.fill();
}

function label(ctx: CanvasRenderingContext2D, text: string, x: number,
               y: number): void {
  ctx.fillStyle = "#222";
  ctx.font = "10px sans-serif";
  ctx.fillText(text, x, y);
}
