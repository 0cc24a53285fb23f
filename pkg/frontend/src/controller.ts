import { ServiceClient } from "./api";
import { actionForKey } from "./keys";
import type { SaveResponse, SceneDoc, SessionView } from "./types";

export type ControllerEvents = {
  onView?: (view: SessionView) => void;
  onSave?: (result: SaveResponse) => void;
  onError?: (message: string) => void;
};

/**
 * Session state machine. The server is the source of truth: every keypress
 * becomes exactly one request and the latest response replaces the local
 * view. At most one request is in flight; keys pressed while busy are
 * dropped (debounce), never queued.
 */
export class SessionController {
  view: SessionView | null = null;
  lastSave: SaveResponse | null = null;
  private busy = false;

  constructor(private client: ServiceClient, private events: ControllerEvents = {}) {}

  async start(source: { scene_id?: string; scene?: SceneDoc }): Promise<SessionView> {
    const view = await this.client.createSession(source);
    this.view = view;
    this.events.onView?.(view);
    return view;
  }

  /** True when the key mapped to an action that was sent to the server. */
  async handleKey(key: string): Promise<boolean> {
    if (this.view === null || this.busy) {
      return false;
    }
    const { lin_step, ang_step } = this.view.controls;
    const action = actionForKey(key, lin_step, ang_step);
    if (action === null) {
      return false;
    }
    this.busy = true;
    try {
      const id = this.view.id;
      switch (action.kind) {
        case "move":
          this.view = await this.client.move(id, {
            dx: action.dx,
            dy: action.dy,
            dphi: action.dphi,
          });
          break;
        case "record":
          this.view = await this.client.record(id);
          break;
        case "reset":
          this.view = await this.client.reset(id);
          break;
        case "clear":
          this.view = await this.client.clear(id);
          break;
        case "save": {
          const result = await this.client.save(id);
          this.lastSave = result;
          this.view = result.view;
          this.events.onSave?.(result);
          break;
        }
      }
      this.events.onView?.(this.view);
      return true;
    } catch (err) {
      this.events.onError?.(err instanceof Error ? err.message : String(err));
      return false;
    } finally {
      this.busy = false;
    }
  }

  progress(): { recorded: number; required: number } {
    return {
      recorded: this.view?.recorded.length ?? 0,
      required: this.view?.required_waypoints ?? 0,
    };
  }
}
