/**
 * Side-view tank rendering: cubes at (x, z) with gas gauges, LED glyphs,
 * bond links and the water surface line.  The drawing commands target a
 * minimal 2D-context interface so the math is testable without a browser.
 */

import { AgentSnapshot, StateMessage } from "./protocol.js";

export interface TankGeometry {
  widthM: number;          // tank x extent
  depthM: number;          // water depth (z extent)
  edgeM: number;           // cube edge length
}

export const DEFAULT_TANK: TankGeometry = {
  widthM: 0.04,
  depthM: 0.0035,
  edgeM: 0.001,
};

export interface Ctx2d {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  font: string;
}

export interface Viewport {
  width: number;
  height: number;
  margin: number;
}

/** World (x up-tank, z up) to canvas pixels; canvas y grows downward. */
export function worldToCanvas(
  xM: number,
  zM: number,
  tank: TankGeometry,
  view: Viewport,
): { x: number; y: number } {
  const usableW = view.width - 2 * view.margin;
  const usableH = view.height - 2 * view.margin;
  return {
    x: view.margin + (xM / tank.widthM) * usableW,
    y: view.margin + (1 - zM / tank.depthM) * usableH,
  };
}

export function cubeRect(
  agent: AgentSnapshot,
  tank: TankGeometry,
  view: Viewport,
): { x: number; y: number; w: number; h: number } {
  const usableW = view.width - 2 * view.margin;
  const usableH = view.height - 2 * view.margin;
  const w = (tank.edgeM / tank.widthM) * usableW;
  const h = (tank.edgeM / tank.depthM) * usableH;
  const center = worldToCanvas(agent.pos[0], agent.pos[2], tank, view);
  return { x: center.x - w / 2, y: center.y - h / 2, w, h };
}

/** Gauge fill fraction: full scale is 40 nL of gas, clamped to [0, 1]. */
export const GAS_GAUGE_FULL_NL = 40;

export function gasGaugeFraction(agent: AgentSnapshot): number {
  const frac = agent.gas_nl / GAS_GAUGE_FULL_NL;
  return Math.min(1, Math.max(0, frac));
}

export function surfaceLineY(tank: TankGeometry, view: Viewport): number {
  return worldToCanvas(0, tank.depthM, tank, view).y;
}

export const MODE_COLORS: Record<string, string> = {
  Idle: "#8892a6",
  Programming: "#eec643",
  Running: "#2bbf6a",
  Sending: "#5aa7ff",
};

export function drawTank(
  ctx: Ctx2d,
  snapshot: StateMessage | null,
  tank: TankGeometry,
  view: Viewport,
  selected: string | null,
): void {
  ctx.clearRect(0, 0, view.width, view.height);
  ctx.fillStyle = "#0c1830";
  ctx.fillRect(0, 0, view.width, view.height);

  const surfaceY = surfaceLineY(tank, view);
  ctx.strokeStyle = "#5aa7ff";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(view.margin, surfaceY);
  ctx.lineTo(view.width - view.margin, surfaceY);
  ctx.stroke();

  const floorY = worldToCanvas(0, 0, tank, view).y;
  ctx.strokeStyle = "#44506a";
  ctx.beginPath();
  ctx.moveTo(view.margin, floorY);
  ctx.lineTo(view.width - view.margin, floorY);
  ctx.stroke();

  if (!snapshot) return;
  const byId = new Map(snapshot.agents.map((a) => [a.id, a]));

  // Bond links first so cubes draw over them.
  ctx.strokeStyle = "#eec643";
  ctx.lineWidth = 2;
  for (const agent of snapshot.agents) {
    for (const bond of agent.bonds) {
      const peer = byId.get(bond.peer);
      if (!peer || agent.id > peer.id) continue; // draw each bond once
      const a = worldToCanvas(agent.pos[0], agent.pos[2], tank, view);
      const b = worldToCanvas(peer.pos[0], peer.pos[2], tank, view);
      ctx.beginPath();
      ctx.moveTo(a.x, a.y);
      ctx.lineTo(b.x, b.y);
      ctx.stroke();
    }
  }

  for (const agent of snapshot.agents) {
    const rect = cubeRect(agent, tank, view);
    ctx.fillStyle = MODE_COLORS[agent.mode] ?? "#8892a6";
    ctx.fillRect(rect.x, rect.y, rect.w, rect.h);
    ctx.strokeStyle = agent.id === selected ? "#ffffff" : "#1c2a44";
    ctx.lineWidth = agent.id === selected ? 2 : 1;
    ctx.strokeRect(rect.x, rect.y, rect.w, rect.h);

    // Gas gauge: a thin bar rising inside the cube.
    const frac = gasGaugeFraction(agent);
    if (frac > 0) {
      ctx.fillStyle = "#9be8ff";
      const gaugeH = rect.h * frac;
      ctx.fillRect(rect.x + rect.w * 0.35, rect.y + rect.h - gaugeH,
                   rect.w * 0.3, gaugeH);
    }

    // LED glyphs on the transmitting/indicating faces.
    if (agent.leds.g) {
      ctx.fillStyle = "#2bff7a";
      ctx.beginPath();
      ctx.arc(rect.x + rect.w + 3, rect.y + rect.h / 2, 2.5, 0, Math.PI * 2);
      ctx.fill();
    }
    if (agent.leds.r) {
      ctx.fillStyle = "#ff4d4f";
      ctx.beginPath();
      ctx.arc(rect.x + rect.w / 2, rect.y - 3, 2.5, 0, Math.PI * 2);
      ctx.fill();
    }

    ctx.fillStyle = "#dfe7ff";
    ctx.font = "10px system-ui";
    ctx.fillText(agent.id, rect.x - 2, rect.y - 6);
  }
}
