import type { PoseDoc, SessionView } from "./types";

// Structural slice of CanvasRenderingContext2D so tests can record calls.
export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

const OBSTACLE_FILL = "#999999";
const FEASIBLE_STROKE = "#2ca02c";
const INFEASIBLE_STROKE = "#d62728";
const GHOST_STROKE = "#8888cc";

function transformed(vertices: [number, number][], pose: PoseDoc): [number, number][] {
  const c = Math.cos(pose.phi);
  const s = Math.sin(pose.phi);
  return vertices.map(([vx, vy]) => [c * vx - s * vy + pose.x, s * vx + c * vy + pose.y]);
}

/** Draw the latest server view; no client-side physics or extrapolation. */
export function render(ctx: Draw2D, view: SessionView, widthPx: number, heightPx: number): void {
  const ws = view.scene.workspace;
  const scale = Math.min(widthPx / (ws.x_hi - ws.x_lo), heightPx / (ws.y_hi - ws.y_lo));
  const sx = (x: number) => (x - ws.x_lo) * scale;
  const sy = (y: number) => (ws.y_hi - y) * scale; // canvas y grows downward

  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, widthPx, heightPx);
  ctx.strokeStyle = "#000000";
  ctx.lineWidth = 2;
  ctx.strokeRect(sx(ws.x_lo), sy(ws.y_hi), (ws.x_hi - ws.x_lo) * scale, (ws.y_hi - ws.y_lo) * scale);

  ctx.fillStyle = OBSTACLE_FILL;
  for (const ob of view.scene.obstacles) {
    const w = (ob.x_hi - ob.x_lo) * scale;
    const h = (ob.y_hi - ob.y_lo) * scale;
    if (w > 0 && h > 0) {
      ctx.fillRect(sx(ob.x_lo), sy(ob.y_hi), w, h);
    }
  }

  const outline = (pose: PoseDoc, stroke: string, width: number) => {
    const pts = transformed(view.scene.object.vertices, pose);
    ctx.strokeStyle = stroke;
    ctx.lineWidth = width;
    ctx.beginPath();
    pts.forEach(([px, py], i) => {
      if (i === 0) ctx.moveTo(sx(px), sy(py));
      else ctx.lineTo(sx(px), sy(py));
    });
    ctx.closePath();
    ctx.stroke();
  };

  for (const ghost of view.recorded) {
    outline(ghost, GHOST_STROKE, 1);
  }
  outline(view.scene.goal, "#9467bd", 1);

  const p = view.preview;
  const feasible = p.c1_ok && p.c2_ok && p.swept_ok !== false;
  outline(view.current, feasible ? FEASIBLE_STROKE : INFEASIBLE_STROKE, 2);

  ctx.fillStyle = "#000000";
  ctx.font = "14px sans-serif";
  ctx.fillText(`recorded ${view.recorded.length} / ${view.required_waypoints}`, 8, 18);
  if (!feasible) {
    const reasons: string[] = [];
    if (!p.c1_ok) reasons.push("outside workspace");
    if (!p.c2_ok) reasons.push("collision");
    if (p.swept_ok === false) reasons.push("swept collision");
    ctx.fillText(`infeasible: ${reasons.join(", ")}`, 8, 36);
  }
}
