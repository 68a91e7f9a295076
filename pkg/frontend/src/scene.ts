// Workspace rendering: arm links from joint angles, contact fixtures,
// commanded pose, and the master-displacement vector with a spring glyph
// standing in for the force the operator would feel.

import type { ScenePayload, StatePayload } from "./protocol.js";

export interface Viewport {
  width: number;
  height: number;
  scale: number; // pixels per metre
  cx: number; // canvas x of world origin
  cy: number; // canvas y of world origin
}

export function makeViewport(width: number, height: number): Viewport {
  return { width, height, scale: height / 1.6, cx: width * 0.32, cy: height * 0.38 };
}

export function toCanvas(v: Viewport, x: number, y: number): [number, number] {
  return [v.cx + x * v.scale, v.cy - y * v.scale];
}

/** Joint angles to link endpoint positions (drawing only; the service owns
 * the physics). */
export function linkPoints(
  links: number[],
  q: number[],
): [number, number][] {
  const pts: [number, number][] = [[0, 0]];
  let theta = 0;
  let x = 0;
  let y = 0;
  for (let i = 0; i < links.length; i++) {
    theta += q[i];
    x += links[i] * Math.cos(theta);
    y += links[i] * Math.sin(theta);
    pts.push([x, y]);
  }
  return pts;
}

export class SceneRenderer {
  constructor(
    private readonly ctx: CanvasRenderingContext2D,
    private readonly view: Viewport,
  ) {}

  draw(
    scene: ScenePayload,
    state: StatePayload,
    drag: [number, number],
  ): void {
    const { ctx, view } = this;
    ctx.clearRect(0, 0, view.width, view.height);
    this.drawObjects(scene, state);
    this.drawArm(scene, state);
    this.drawTarget(state);
    this.drawMasterPad(scene, state, drag);
  }

  private drawObjects(scene: ScenePayload, state: StatePayload): void {
    const { ctx, view } = this;
    let button = 0;
    for (const obj of scene.objects) {
      if (obj.kind === "box") {
        const [x0, y0] = toCanvas(view, obj.bounds[0], obj.bounds[3]);
        const w = (obj.bounds[1] - obj.bounds[0]) * view.scale;
        const h = (obj.bounds[3] - obj.bounds[2]) * view.scale;
        if (obj.is_button) {
          const active = state.buttons[button++] ?? false;
          ctx.fillStyle = active ? "#e5484d" : "#803035";
          ctx.fillRect(x0, y0, w, h);
          ctx.strokeStyle = active ? "#ff9599" : "#5a2327";
          ctx.strokeRect(x0, y0, w, h);
        } else {
          ctx.fillStyle = "#4a5568";
          ctx.fillRect(x0, y0, w, h);
        }
      } else {
        // half plane: draw its surface line across the viewport
        const [px, py] = obj.point;
        const [nx, ny] = obj.normal;
        const [tx, ty] = [-ny, nx];
        const a = toCanvas(view, px - tx * 2, py - ty * 2);
        const b = toCanvas(view, px + tx * 2, py + ty * 2);
        ctx.strokeStyle = "#5d6b7a";
        ctx.lineWidth = 3;
        ctx.beginPath();
        ctx.moveTo(a[0], a[1]);
        ctx.lineTo(b[0], b[1]);
        ctx.stroke();
      }
    }
  }

  private drawArm(scene: ScenePayload, state: StatePayload): void {
    const { ctx, view } = this;
    const pts = linkPoints(scene.links, state.q);
    ctx.strokeStyle = "#d8dee6";
    ctx.lineWidth = 6;
    ctx.lineCap = "round";
    ctx.beginPath();
    pts.forEach(([x, y], i) => {
      const [cx, cy] = toCanvas(view, x, y);
      if (i === 0) {
        ctx.moveTo(cx, cy);
      } else {
        ctx.lineTo(cx, cy);
      }
    });
    ctx.stroke();
    for (const [x, y] of pts) {
      const [cx, cy] = toCanvas(view, x, y);
      ctx.fillStyle = "#8b97a5";
      ctx.beginPath();
      ctx.arc(cx, cy, 5, 0, 2 * Math.PI);
      ctx.fill();
    }
    const [ex, ey] = toCanvas(view, state.ee[0], state.ee[1]);
    ctx.fillStyle = "#6fb3ff";
    ctx.beginPath();
    ctx.arc(ex, ey, 7, 0, 2 * Math.PI);
    ctx.fill();
  }

  private drawTarget(state: StatePayload): void {
    const { ctx, view } = this;
    const [tx, ty] = toCanvas(view, state.xd[0], state.xd[1]);
    ctx.strokeStyle = "#57d9a3";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.arc(tx, ty, 9, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.beginPath();
    ctx.moveTo(tx - 12, ty);
    ctx.lineTo(tx + 12, ty);
    ctx.moveTo(tx, ty - 12);
    ctx.lineTo(tx, ty + 12);
    ctx.stroke();
  }

  /** Master pad in the corner: workspace circle, live device position and
   * the drag target; spring compression between them is the haptic proxy. */
  private drawMasterPad(
    scene: ScenePayload,
    state: StatePayload,
    drag: [number, number],
  ): void {
    const { ctx, view } = this;
    const r = 70;
    const cx = view.width - r - 18;
    const cy = view.height - r - 18;
    const s = r / scene.workspace_radius;
    ctx.strokeStyle = "#39424e";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.arc(cx, cy, r, 0, 2 * Math.PI);
    ctx.stroke();
    const dx = cx + drag[0] * s;
    const dy = cy - drag[1] * s;
    const mx = cx + state.master[0] * s;
    const my = cy - state.master[1] * s;
    ctx.strokeStyle = "#ffd23f";
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    ctx.moveTo(mx, my);
    ctx.lineTo(dx, dy);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "#ffd23f";
    ctx.beginPath();
    ctx.arc(dx, dy, 4, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#6fb3ff";
    ctx.beginPath();
    ctx.arc(mx, my, 6, 0, 2 * Math.PI);
    ctx.fill();
  }
}
