// Pointer and keyboard input: dragging on the workspace canvas pushes the
// master device, space holds the gripper (velocity mode), arrow keys nudge
// the commanded pose, "h" taps the hammer.

import type { InputState } from "./model.js";

export const NUDGE_STEP_M = 0.01;
export const DRAG_SCALE = 0.25; // metres of master travel per canvas metre

export class InputTracker {
  readonly state: InputState = {
    drag: [0, 0],
    gripper: false,
    nudge: [0, 0],
    hammer: false,
  };
  changed = false;
  private dragging = false;
  private origin: [number, number] = [0, 0];

  attach(canvas: HTMLCanvasElement): void {
    canvas.addEventListener("pointerdown", (ev) => {
      this.dragging = true;
      this.origin = [ev.offsetX, ev.offsetY];
      canvas.setPointerCapture(ev.pointerId);
    });
    canvas.addEventListener("pointermove", (ev) => {
      if (!this.dragging) {
        return;
      }
      const px = ev.offsetX - this.origin[0];
      const py = ev.offsetY - this.origin[1];
      // canvas y grows downward; world y grows upward
      this.setDrag([px * DRAG_SCALE * 0.01, -py * DRAG_SCALE * 0.01]);
    });
    const release = () => {
      this.dragging = false;
      this.setDrag([0, 0]);
    };
    canvas.addEventListener("pointerup", release);
    canvas.addEventListener("pointercancel", release);

    window.addEventListener("keydown", (ev) => this.onKey(ev, true));
    window.addEventListener("keyup", (ev) => this.onKey(ev, false));
  }

  setDrag(v: [number, number]): void {
    this.state.drag = v;
    this.changed = true;
  }

  onKey(ev: KeyboardEvent, down: boolean): void {
    if (ev.repeat) {
      return;
    }
    switch (ev.code) {
      case "Space":
        this.state.gripper = down;
        this.changed = true;
        ev.preventDefault();
        break;
      case "KeyH":
        if (down) {
          this.state.hammer = true;
          this.changed = true;
        }
        break;
      case "ArrowLeft":
      case "ArrowRight":
      case "ArrowUp":
      case "ArrowDown":
        if (down) {
          const [nx, ny] = keyToNudge(ev.code);
          this.state.nudge = [
            this.state.nudge[0] + nx,
            this.state.nudge[1] + ny,
          ];
          this.changed = true;
          ev.preventDefault();
        }
        break;
    }
  }

  /** One-shot fields are consumed by the send loop after each command. */
  consumeOneShots(): void {
    this.state.nudge = [0, 0];
    this.state.hammer = false;
  }

  hasOneShot(): boolean {
    return (
      this.state.hammer ||
      this.state.nudge[0] !== 0 ||
      this.state.nudge[1] !== 0
    );
  }
}

export function keyToNudge(code: string): [number, number] {
  switch (code) {
    case "ArrowLeft":
      return [-NUDGE_STEP_M, 0];
    case "ArrowRight":
      return [NUDGE_STEP_M, 0];
    case "ArrowUp":
      return [0, NUDGE_STEP_M];
    case "ArrowDown":
      return [0, -NUDGE_STEP_M];
    default:
      return [0, 0];
  }
}
