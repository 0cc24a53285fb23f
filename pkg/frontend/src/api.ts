import type { SaveResponse, SceneDoc, SessionView, VerificationReportDoc } from "./types";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function requestJson<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(base + path, init);
  const body = await res.json().catch(() => ({}));
  if (!res.ok) {
    const detail = (body as { detail?: string }).detail ?? res.statusText;
    throw new ApiError(res.status, String(detail));
  }
  return body as T;
}

function post<T>(base: string, path: string, payload?: unknown): Promise<T> {
  return requestJson<T>(base, path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(payload ?? {}),
  });
}

/** Typed client for the demonstration service; the server owns all state. */
export class ServiceClient {
  constructor(private base: string) {}

  listScenes(): Promise<{ scenes: string[] }> {
    return requestJson(this.base, "/scenes");
  }

  generateScene(params: {
    seed?: number;
    index?: number;
    num_openings?: number;
    object_shape?: string;
    distribution?: string;
  }): Promise<SceneDoc> {
    return post(this.base, "/scenes/generate", params);
  }

  createSession(source: { scene_id?: string; scene?: SceneDoc }): Promise<SessionView> {
    return post(this.base, "/sessions", source);
  }

  getSession(id: string): Promise<SessionView> {
    return requestJson(this.base, `/sessions/${id}`);
  }

  move(id: string, delta: { dx: number; dy: number; dphi: number }): Promise<SessionView> {
    return post(this.base, `/sessions/${id}/move`, delta);
  }

  record(id: string): Promise<SessionView> {
    return post(this.base, `/sessions/${id}/record`);
  }

  undo(id: string): Promise<SessionView> {
    return post(this.base, `/sessions/${id}/undo`);
  }

  reset(id: string): Promise<SessionView> {
    return post(this.base, `/sessions/${id}/reset`);
  }

  clear(id: string): Promise<SessionView> {
    return post(this.base, `/sessions/${id}/clear`);
  }

  save(id: string): Promise<SaveResponse> {
    return post(this.base, `/sessions/${id}/save`);
  }

  verify(scene: SceneDoc, waypoints: { x: number; y: number; phi: number }[]): Promise<VerificationReportDoc> {
    return post(this.base, "/verify", { scene, waypoints });
  }
}
