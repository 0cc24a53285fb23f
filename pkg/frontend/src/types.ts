// Server payload shapes, mirroring the service's JSON responses.

export type PoseDoc = { x: number; y: number; phi: number };

export type RectDoc = { x_lo: number; x_hi: number; y_lo: number; y_hi: number };

export type OpeningDoc = {
  wall_x_lo: number;
  wall_x_hi: number;
  gap_y_lo: number;
  gap_y_hi: number;
  index: number;
};

export type SceneDoc = {
  workspace: RectDoc;
  obstacles: RectDoc[];
  openings: OpeningDoc[];
  object: { vertices: [number, number][] };
  start: PoseDoc;
  goal: PoseDoc;
  id: string;
  distribution_tag: string;
};

export type PreviewFlags = {
  c1_ok: boolean;
  c2_ok: boolean;
  swept_ok: boolean | null;
  bad_vertex: number | null;
  bad_obstacle: number | null;
  magnitude: number;
};

export type SessionView = {
  id: string;
  scene: SceneDoc;
  current: PoseDoc;
  recorded: PoseDoc[];
  required_waypoints: number;
  preview: PreviewFlags;
  controls: { lin_step: number; ang_step: number; lin_limit: number; ang_limit: number };
};

export type VerificationReportDoc = {
  success: boolean;
  first_fail_waypoint: number | null;
  violation: string | null;
  detail: Record<string, unknown>;
};

export type SaveResponse = {
  csv_path: string;
  scene_path: string;
  report: VerificationReportDoc;
  view: SessionView;
};
