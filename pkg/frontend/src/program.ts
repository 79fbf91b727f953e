/**
 * 58-bit program words: field-level decode for the editor preview.
 *
 * Layout (bit 0 first): clockSelect, autorun, sendOnIdle, reserved, then
 * three 18-bit phase blocks of pattern[8] mask[3] repeats[3] condSel[2]
 * condTarget[2].
 */

export interface PhaseFields {
  pattern: number;
  patternBits: string;
  mask: number;
  actuators: string[];     // which of A1..A3 the mask drives
  repeats: number;
  cycles: number;          // repeats + 1
  condSel: string;
  condTarget: string;
}

export interface ProgramFields {
  clock: "slow (20 Hz)" | "fast (400 Hz)";
  autorun: boolean;
  sendOnIdle: boolean;
  phases: [PhaseFields, PhaseFields, PhaseFields];
}

const COND_SEL = ["always at end", "sensor 1 high", "sensor 2 high", "trigger command"];
const COND_TARGET = ["previous", "same", "next", "idle"];

function field(bits: string, start: number, width: number): number {
  let value = 0;
  for (let i = 0; i < width; i += 1) {
    value = (value << 1) | (bits.charCodeAt(start + i) - 48);
  }
  return value;
}

export function decodeProgram(bits: string): ProgramFields {
  if (!/^[01]{58}$/.test(bits)) {
    throw new Error("program must be 58 characters of 0/1");
  }
  if (bits[3] !== "0") {
    throw new Error("reserved header bit must be 0");
  }
  const phases = [0, 1, 2].map((p) => {
    const base = 4 + 18 * p;
    const mask = field(bits, base + 8, 3);
    const actuators: string[] = [];
    for (let k = 0; k < 3; k += 1) {
      if ((mask >> k) & 1) actuators.push(`A${k + 1}`);
    }
    const repeats = field(bits, base + 11, 3);
    return {
      pattern: field(bits, base, 8),
      patternBits: bits.slice(base, base + 8),
      mask,
      actuators,
      repeats,
      cycles: repeats + 1,
      condSel: COND_SEL[field(bits, base + 14, 2)],
      condTarget: COND_TARGET[field(bits, base + 16, 2)],
    } as PhaseFields;
  });
  return {
    clock: bits[0] === "1" ? "fast (400 Hz)" : "slow (20 Hz)",
    autorun: bits[1] === "1",
    sendOnIdle: bits[2] === "1",
    phases: phases as [PhaseFields, PhaseFields, PhaseFields],
  };
}

/** One-line summary per phase, used directly by the editor preview pane. */
export function describeProgram(bits: string): string[] {
  const fields = decodeProgram(bits);
  const lines = [
    `clock ${fields.clock}${fields.autorun ? ", autorun" : ""}` +
      `${fields.sendOnIdle ? ", send-on-idle" : ""}`,
  ];
  fields.phases.forEach((phase, i) => {
    const drives = phase.actuators.length ? phase.actuators.join("+") : "nothing";
    lines.push(
      `phase ${i}: ${phase.patternBits} on ${drives}, ${phase.cycles} cycle` +
        `${phase.cycles > 1 ? "s" : ""}, ${phase.condSel} -> ${phase.condTarget}`,
    );
  });
  return lines;
}
