/**
 * Local view state. Rendering is a pure function of the latest snapshot plus
 * this state; nothing here is authoritative world state.
 */

import type { TacticDef, ParamValue } from "./protocol.js";

export interface Camera {
  x: number; // world meters at viewport center
  y: number;
  scale: number; // pixels per meter
}

export interface LayerToggles {
  agents: boolean;
  sketches: boolean;
  coverage: boolean;
  overlays: boolean;
  artifacts: boolean;
}

export interface PendingPlacement {
  def: TacticDef;
  position: [number, number]; // draggable until submitted
  params: Record<string, ParamValue>;
}

export type Tool = "select" | "place" | "link" | "point" | "polyline" | "lasso";

export class ViewModel {
  camera: Camera = { x: 0, y: 0, scale: 4 };
  layers: LayerToggles = {
    agents: true, sketches: true, coverage: true, overlays: true,
    artifacts: true,
  };
  tool: Tool = "select";
  pending: PendingPlacement | null = null;
  linkParent: string | null = null;
  strokeBuffer: [number, number][] = [];
  viewportW = 800;
  viewportH = 600;

  worldToScreen(p: [number, number]): [number, number] {
    return [
      this.viewportW / 2 + (p[0] - this.camera.x) * this.camera.scale,
      this.viewportH / 2 - (p[1] - this.camera.y) * this.camera.scale,
    ];
  }

  screenToWorld(p: [number, number]): [number, number] {
    return [
      this.camera.x + (p[0] - this.viewportW / 2) / this.camera.scale,
      this.camera.y - (p[1] - this.viewportH / 2) / this.camera.scale,
    ];
  }

  panBy(dxPixels: number, dyPixels: number): void {
    this.camera.x -= dxPixels / this.camera.scale;
    this.camera.y += dyPixels / this.camera.scale;
  }

  /** Zoom so the world point under the cursor stays under the cursor. */
  zoomAt(screen: [number, number], factor: number): void {
    const anchor = this.screenToWorld(screen);
    this.camera.scale = Math.min(100, Math.max(0.2, this.camera.scale * factor));
    const after = this.screenToWorld(screen);
    this.camera.x += anchor[0] - after[0];
    this.camera.y += anchor[1] - after[1];
  }

  /** Pan/zoom the camera over a referenced location (intel hyperlinks). */
  flyTo(location: [number, number], scale = 8): void {
    this.camera = { x: location[0], y: location[1], scale };
  }
}
