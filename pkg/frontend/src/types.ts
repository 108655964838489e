/** Wire types mirroring the backend's JSON exactly. */

export type Stage = "step-generation" | "node-extraction" | "graph-construction" | "grounding";

export const STAGES: Stage[] = [
  "step-generation",
  "node-extraction",
  "graph-construction",
  "grounding",
];

export interface Step {
  step_id: string;
  text: string;
  selected: boolean;
  provenance: "model" | "human-edited" | "human-added";
  parent_step_id: string | null;
}

export interface EventNode {
  node_id: string;
  subject: string;
  verb: string;
  object: string | null;
  label: string;
  selected: boolean;
  provenance: "model" | "human-edited" | "human-added";
  source_step_id: string | null;
  orphaned: boolean;
}

export interface GraphNode {
  node_id: string;
  label: string | null;
  provenance: string;
}

export interface Edge {
  source: string;
  target: string;
  kind: "temporal" | "hierarchical";
  provenance: string;
}

export interface Graph {
  graph_nodes: GraphNode[];
  edges: Edge[];
  same_time: [string, string][];
}

export interface GroundingCandidate {
  xpo_id: string;
  name: string;
  definition: string;
  score: number;
  rank: number;
  method: "similarity" | "inference";
}

export interface GroundingQuery {
  method: "similarity" | "inference";
  k: number;
  candidates: GroundingCandidate[];
}

export interface GroundingState {
  chosen_xpo_id: string | null;
  relevant_ids: string[];
  queries: GroundingQuery[];
}

export interface CurationLogEntry {
  event_id: string;
  actor: "model" | "human";
  action: string;
  payload: Record<string, unknown>;
  timestamp: string;
}

export interface SessionSnapshot {
  session_id: string;
  scenario: string;
  stage_cursor: Stage;
  steps: Step[];
  nodes: EventNode[];
  graph: Graph;
  groundings: Record<string, GroundingState>;
  curation_log: CurationLogEntry[];
  created_at: string;
  updated_at: string;
}

/** One curation event as posted to /sessions/{id}/events. */
export interface CurationEventBody {
  action: string;
  payload: Record<string, unknown>;
  actor?: "human" | "model";
}

export interface Job {
  job_id: string;
  session_id: string;
  stage: Stage;
  status: "running" | "done" | "error";
  progress: { done: number; total: number };
  result?: { stage: Stage; event_ids: string[]; created: Record<string, unknown>; warnings: string[] };
  error?: { code: string; message: string };
}

export interface Ratio {
  num: number;
  den: number;
}

export interface EvalReport {
  step_accuracy: Ratio | null;
  node_accuracy: Ratio | null;
  graph_node_edit_distance: number | null;
  graph_edge_edit_distance: number | null;
  grounding_success_rate: Ratio | null;
  elapsed_s: number | null;
}

export interface ExportDocument {
  schema_version: number;
  scenario: string;
  nodes: Record<string, unknown>[];
  edges: Record<string, unknown>[];
  same_time: [string, string][];
  provenance: Record<string, Record<string, number>>;
  warnings: { temporal_cycles: string[][]; multi_parent: string[] };
}
