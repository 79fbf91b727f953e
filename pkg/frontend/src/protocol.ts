/**
 * Wire protocol shared with the simulation service: message shapes and the
 * client-side validation the composer applies before anything is sent.
 */

export interface AgentSnapshot {
  id: string;
  pos: [number, number, number];
  gas_nl: number;
  mode: string;
  phase: number;
  leds: { g: boolean; r: boolean };
  at_surface: boolean;
  on_floor: boolean;
  bonds: { peer: string; face: string; score: number }[];
}

export interface StateMessage {
  type: "state";
  tick: number;
  agents: AgentSnapshot[];
}

export interface EventMessage {
  type: "event";
  tick: number;
  kind: string;
  agent?: string;
  [extra: string]: unknown;
}

export interface AckMessage {
  type: "ack";
  ref?: number;
}

export interface ErrorMessage {
  type: "error";
  msg: string;
  ref?: number;
}

export type ServerMessage = StateMessage | EventMessage | AckMessage | ErrorMessage;

export interface CommandMessage {
  v: 1;
  type: "command";
  kind: "global_light";
  rate_hz: number;
  payload: string;
  duration_s?: number;
  id?: number;
}

export interface ProgramMessage {
  type: "program";
  agent: string;
  bits: string;
  id?: number;
}

export interface ControlMessage {
  type: "control";
  action: "pause" | "resume" | "step" | "reset" | "speed";
  value?: number;
  id?: number;
}

export type ClientMessage = CommandMessage | ProgramMessage | ControlMessage;

export const NAMED_PAYLOADS = ["START", "STOP", "SEND"] as const;

export function isBitString(text: string): boolean {
  return text.length > 0 && /^[01]+$/.test(text);
}

/** Composer-side validation mirroring the server's acceptance rules. */
export function validateCommand(rateHz: number, payload: string): string | null {
  if (!Number.isFinite(rateHz) || rateHz < 1 || rateHz > 1000) {
    return "rate must be within 1..1000 Hz";
  }
  const named = (NAMED_PAYLOADS as readonly string[]).includes(payload);
  if (named) return null;
  if (!isBitString(payload)) {
    return "payload must be START, STOP, SEND or a bit string";
  }
  if (payload.length !== 8 && payload.length !== 58) {
    return `bit payloads must be 8 or 58 bits, not ${payload.length}`;
  }
  return null;
}

export function validateProgramBits(bits: string): string | null {
  if (!isBitString(bits)) return "program must be a string of 0/1";
  if (bits.length !== 58) return `program must be 58 bits, not ${bits.length}`;
  if (bits[3] !== "0") return "reserved header bit (bit 3) must be 0";
  return null;
}

export function commandMessage(
  rateHz: number,
  payload: string,
  durationS: number | undefined,
  id: number,
): CommandMessage {
  const err = validateCommand(rateHz, payload);
  if (err) throw new Error(err);
  const msg: CommandMessage = {
    v: 1,
    type: "command",
    kind: "global_light",
    rate_hz: rateHz,
    payload,
    id,
  };
  if (durationS !== undefined) msg.duration_s = durationS;
  return msg;
}

export function parseServerMessage(text: string): ServerMessage | null {
  let parsed: unknown;
  try {
    parsed = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof parsed !== "object" || parsed === null) return null;
  const type = (parsed as { type?: unknown }).type;
  if (type === "state" || type === "event" || type === "ack" || type === "error") {
    return parsed as ServerMessage;
  }
  return null;
}
