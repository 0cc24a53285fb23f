import { describe, expect, it } from "vitest";

import { actionForKey } from "../src/keys";

const LIN = 0.1;
const ANG = 0.1;

describe("keyboard mapping", () => {
  it("arrows translate in the x-y plane", () => {
    expect(actionForKey("ArrowRight", LIN, ANG)).toEqual({ kind: "move", dx: +LIN, dy: 0, dphi: 0 });
    expect(actionForKey("ArrowLeft", LIN, ANG)).toEqual({ kind: "move", dx: -LIN, dy: 0, dphi: 0 });
    expect(actionForKey("ArrowUp", LIN, ANG)).toEqual({ kind: "move", dx: 0, dy: +LIN, dphi: 0 });
    expect(actionForKey("ArrowDown", LIN, ANG)).toEqual({ kind: "move", dx: 0, dy: -LIN, dphi: 0 });
  });

  it("A and D rotate the heading", () => {
    expect(actionForKey("a", LIN, ANG)).toEqual({ kind: "move", dx: 0, dy: 0, dphi: +ANG });
    expect(actionForKey("A", LIN, ANG)).toEqual({ kind: "move", dx: 0, dy: 0, dphi: +ANG });
    expect(actionForKey("d", LIN, ANG)).toEqual({ kind: "move", dx: 0, dy: 0, dphi: -ANG });
    expect(actionForKey("D", LIN, ANG)).toEqual({ kind: "move", dx: 0, dy: 0, dphi: -ANG });
  });

  it("ENTER records, R resets, C clears, S saves", () => {
    expect(actionForKey("Enter", LIN, ANG)).toEqual({ kind: "record" });
    expect(actionForKey("r", LIN, ANG)).toEqual({ kind: "reset" });
    expect(actionForKey("c", LIN, ANG)).toEqual({ kind: "clear" });
    expect(actionForKey("s", LIN, ANG)).toEqual({ kind: "save" });
  });

  it("unbound keys map to nothing", () => {
    expect(actionForKey("x", LIN, ANG)).toBeNull();
    expect(actionForKey("Escape", LIN, ANG)).toBeNull();
    expect(actionForKey(" ", LIN, ANG)).toBeNull();
  });
});
