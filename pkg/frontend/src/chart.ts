// Strip chart for the streamed feedback force: last ten seconds, two
// traces, autoscaled symmetric vertical axis.

import type { ForceHistory } from "./model.js";

export interface ChartLayout {
  width: number;
  height: number;
  padding: number;
}

/** Symmetric scale covering every sample, never tighter than +-1 N. */
export function verticalScale(
  samples: readonly { fx: number; fy: number }[],
): number {
  let peak = 1;
  for (const s of samples) {
    peak = Math.max(peak, Math.abs(s.fx), Math.abs(s.fy));
  }
  return peak * 1.1;
}

export function sampleToXY(
  t: number,
  value: number,
  tEnd: number,
  windowSeconds: number,
  scale: number,
  layout: ChartLayout,
): [number, number] {
  const { width, height, padding } = layout;
  const x =
    padding +
    ((t - (tEnd - windowSeconds)) / windowSeconds) * (width - 2 * padding);
  const y = height / 2 - (value / scale) * (height / 2 - padding);
  return [x, y];
}

export class StripChart {
  constructor(
    private readonly ctx: CanvasRenderingContext2D,
    private readonly layout: ChartLayout,
  ) {}

  draw(history: ForceHistory): void {
    const { ctx, layout } = this;
    const samples = history.get();
    ctx.clearRect(0, 0, layout.width, layout.height);
    ctx.strokeStyle = "#39424e";
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(layout.padding, layout.height / 2);
    ctx.lineTo(layout.width - layout.padding, layout.height / 2);
    ctx.stroke();
    if (samples.length < 2) {
      return;
    }
    const scale = verticalScale(samples);
    const tEnd = samples[samples.length - 1].t;
    const traces: ["fx" | "fy", string][] = [
      ["fx", "#6fb3ff"],
      ["fy", "#ffb36f"],
    ];
    for (const [key, color] of traces) {
      ctx.strokeStyle = color;
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      samples.forEach((s, i) => {
        const [x, y] = sampleToXY(
          s.t,
          s[key],
          tEnd,
          history.windowSeconds,
          scale,
          layout,
        );
        if (i === 0) {
          ctx.moveTo(x, y);
        } else {
          ctx.lineTo(x, y);
        }
      });
      ctx.stroke();
    }
    ctx.fillStyle = "#9aa7b4";
    ctx.font = "11px sans-serif";
    ctx.fillText(`±${scale.toFixed(1)} N`, 4, 12);
  }
}
