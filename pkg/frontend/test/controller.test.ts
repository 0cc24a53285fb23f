import { describe, expect, it } from "vitest";

import { SessionController } from "../src/controller";
import type { SessionView } from "../src/types";

function fakeView(overrides: Partial<SessionView> = {}): SessionView {
  return {
    id: "sess",
    scene: {
      workspace: { x_lo: 0, x_hi: 10, y_lo: 0, y_hi: 10 },
      obstacles: [],
      openings: [],
      object: { vertices: [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]] },
      start: { x: 1, y: 5, phi: 0 },
      goal: { x: 9, y: 5, phi: 0 },
      id: "scene",
      distribution_tag: "ID",
    },
    current: { x: 1, y: 5, phi: 0 },
    recorded: [],
    required_waypoints: 6,
    preview: { c1_ok: true, c2_ok: true, swept_ok: null, bad_vertex: null, bad_obstacle: null, magnitude: 0 },
    controls: { lin_step: 0.1, ang_step: 0.1, lin_limit: 0.5, ang_limit: 0.3 },
    ...overrides,
  };
}

class StubClient {
  calls: string[] = [];
  resolveMove: (() => void) | null = null;

  async createSession() {
    this.calls.push("create");
    return fakeView();
  }
  move(_id: string, delta: { dx: number; dy: number; dphi: number }) {
    this.calls.push(`move ${delta.dx} ${delta.dy} ${delta.dphi}`);
    return new Promise<SessionView>((resolve) => {
      this.resolveMove = () => resolve(fakeView({ current: { x: 1.1, y: 5, phi: 0 } }));
    });
  }
  async record(_id: string) {
    this.calls.push("record");
    return fakeView({ recorded: [{ x: 1, y: 5, phi: 0 }] });
  }
  async reset() {
    this.calls.push("reset");
    return fakeView();
  }
  async clear() {
    this.calls.push("clear");
    return fakeView();
  }
  async save() {
    this.calls.push("save");
    return { csv_path: "x.csv", scene_path: "x.scene.json", report: { success: true, first_fail_waypoint: null, violation: null, detail: {} }, view: fakeView() };
  }
}

describe("session controller", () => {
  it("ignores keys before a session starts", async () => {
    const stub = new StubClient();
    const ctl = new SessionController(stub as never);
    expect(await ctl.handleKey("ArrowRight")).toBe(false);
    expect(stub.calls).toEqual([]);
  });

  it("sends one request per handled key and updates the view", async () => {
    const stub = new StubClient();
    const views: SessionView[] = [];
    const ctl = new SessionController(stub as never, { onView: (v) => views.push(v) });
    await ctl.start({ scene_id: "scene" });
    const sent = ctl.handleKey("ArrowRight");
    stub.resolveMove?.();
    expect(await sent).toBe(true);
    expect(stub.calls).toContain("move 0.1 0 0");
    expect(views.at(-1)?.current.x).toBeCloseTo(1.1);
  });

  it("drops keys while a request is in flight", async () => {
    const stub = new StubClient();
    const ctl = new SessionController(stub as never);
    await ctl.start({ scene_id: "scene" });
    const first = ctl.handleKey("ArrowRight"); // pending until resolveMove
    const second = await ctl.handleKey("ArrowUp");
    expect(second).toBe(false);
    stub.resolveMove?.();
    expect(await first).toBe(true);
    expect(stub.calls.filter((c) => c.startsWith("move"))).toHaveLength(1);
  });

  it("tracks recorded-versus-required progress from the server view", async () => {
    const stub = new StubClient();
    const ctl = new SessionController(stub as never);
    await ctl.start({ scene_id: "scene" });
    expect(ctl.progress()).toEqual({ recorded: 0, required: 6 });
    await ctl.handleKey("Enter");
    expect(ctl.progress()).toEqual({ recorded: 1, required: 6 });
  });

  it("surfaces server errors through the error callback", async () => {
    const stub = new StubClient();
    stub.save = async () => {
      throw new Error("nothing recorded");
    };
    const errors: string[] = [];
    const ctl = new SessionController(stub as never, { onError: (m) => errors.push(m) });
    await ctl.start({ scene_id: "scene" });
    expect(await ctl.handleKey("s")).toBe(false);
    expect(errors).toEqual(["nothing recorded"]);
  });
});
