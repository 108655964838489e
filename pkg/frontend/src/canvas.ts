/** Direct-manipulation graph canvas.
 *
 * Gestures (double-click to add a node, drag node-to-node for an edge, click
 * to select and edit/delete) map to curation events through `gestureToEvent`,
 * one event per completed gesture. Invalid gestures (self-loop drags, empty
 * edits) map to null and never reach the server; server-side invariants stay
 * the backstop. Layout is presentation only and never persisted: hierarchical
 * edges run top-down, temporal edges left-to-right, distinct stroke styles.
 */

import { clear, el, svgEl } from "./dom.js";
import type { CurationEventBody, Edge, EventNode, Graph } from "./types.js";

export type EdgeKind = "temporal" | "hierarchical";

export type Gesture =
  | { type: "add-node"; label?: string; nodeId?: string }
  | { type: "delete-node"; nodeId: string }
  | { type: "edit-node"; nodeId: string; subject?: string; verb?: string; object?: string | null }
  | { type: "draw-edge"; source: string; target: string; kind: EdgeKind }
  | { type: "delete-edge"; source: string; target: string; kind: EdgeKind }
  | {
      type: "edit-edge";
      source: string;
      target: string;
      kind: EdgeKind;
      newKind?: EdgeKind;
      newSource?: string;
      newTarget?: string;
    };

/** Map a completed gesture to exactly one curation event, or null when the
 * gesture is invalid (rejected client-side with no event posted). */
export function gestureToEvent(gesture: Gesture): CurationEventBody | null {
  switch (gesture.type) {
    case "add-node": {
      if (gesture.nodeId) {
        return { action: "add-graph-node", payload: { node_id: gesture.nodeId } };
      }
      const label = gesture.label?.trim();
      if (!label) {
        return null;
      }
      return { action: "add-graph-node", payload: { label } };
    }
    case "delete-node":
      return { action: "delete-graph-node", payload: { node_id: gesture.nodeId } };
    case "edit-node": {
      const payload: Record<string, unknown> = { node_id: gesture.nodeId };
      if (gesture.subject !== undefined) {
        payload.subject = gesture.subject;
      }
      if (gesture.verb !== undefined) {
        payload.verb = gesture.verb;
      }
      if (gesture.object !== undefined) {
        payload.object = gesture.object;
      }
      return Object.keys(payload).length > 1 ? { action: "edit-node", payload } : null;
    }
    case "draw-edge": {
      if (gesture.source === gesture.target) {
        return null; // self-loop: rejected before it ever becomes an event
      }
      return {
        action: "add-edge",
        payload: { source: gesture.source, target: gesture.target, kind: gesture.kind },
      };
    }
    case "delete-edge":
      return {
        action: "delete-edge",
        payload: { source: gesture.source, target: gesture.target, kind: gesture.kind },
      };
    case "edit-edge": {
      const payload: Record<string, unknown> = {
        source: gesture.source,
        target: gesture.target,
        kind: gesture.kind,
      };
      let changed = false;
      if (gesture.newKind && gesture.newKind !== gesture.kind) {
        payload.new_kind = gesture.newKind;
        changed = true;
      }
      if (gesture.newSource && gesture.newSource !== gesture.source) {
        payload.new_source = gesture.newSource;
        changed = true;
      }
      if (gesture.newTarget && gesture.newTarget !== gesture.target) {
        payload.new_target = gesture.newTarget;
        changed = true;
      }
      return changed ? { action: "edit-edge", payload } : null;
    }
  }
}

interface Position {
  x: number;
  y: number;
}

/** Deterministic layered layout: hierarchical depth picks the row, temporal
 * order (topological within a row) picks the column. */
export function layoutPositions(graph: Graph): Map<string, Position> {
  const ids = graph.graph_nodes.map((node) => node.node_id);
  const depth = new Map<string, number>(ids.map((id) => [id, 0]));
  const children = new Map<string, string[]>();
  for (const edge of graph.edges) {
    if (edge.kind === "hierarchical") {
      children.set(edge.source, [...(children.get(edge.source) ?? []), edge.target]);
    }
  }
  // BFS a few rounds; cycles in hierarchy just stop deepening
  for (let round = 0; round < ids.length; round += 1) {
    let moved = false;
    for (const [parent, kids] of children) {
      for (const kid of kids) {
        const want = (depth.get(parent) ?? 0) + 1;
        if ((depth.get(kid) ?? 0) < want && want <= ids.length) {
          depth.set(kid, want);
          moved = true;
        }
      }
    }
    if (!moved) {
      break;
    }
  }

  const layers = new Map<number, string[]>();
  for (const id of ids) {
    const layer = depth.get(id) ?? 0;
    layers.set(layer, [...(layers.get(layer) ?? []), id]);
  }

  const positions = new Map<string, Position>();
  for (const [layer, members] of [...layers.entries()].sort((a, b) => a[0] - b[0])) {
    const ordered = temporalOrder(members, graph.edges);
    ordered.forEach((id, index) => {
      positions.set(id, { x: 110 + index * 190, y: 70 + layer * 130 });
    });
  }
  return positions;
}

function temporalOrder(members: string[], edges: Edge[]): string[] {
  const here = new Set(members);
  const incoming = new Map<string, number>(members.map((id) => [id, 0]));
  const out = new Map<string, string[]>();
  for (const edge of edges) {
    if (edge.kind === "temporal" && here.has(edge.source) && here.has(edge.target)) {
      incoming.set(edge.target, (incoming.get(edge.target) ?? 0) + 1);
      out.set(edge.source, [...(out.get(edge.source) ?? []), edge.target]);
    }
  }
  const queue = members.filter((id) => (incoming.get(id) ?? 0) === 0);
  const ordered: string[] = [];
  const seen = new Set<string>();
  while (queue.length) {
    const id = queue.shift()!;
    if (seen.has(id)) {
      continue;
    }
    seen.add(id);
    ordered.push(id);
    for (const next of out.get(id) ?? []) {
      incoming.set(next, (incoming.get(next) ?? 1) - 1);
      if ((incoming.get(next) ?? 0) === 0) {
        queue.push(next);
      }
    }
  }
  for (const id of members) {
    if (!seen.has(id)) {
      ordered.push(id); // temporal cycle: fall back to insertion order
    }
  }
  return ordered;
}

interface CanvasDeps {
  post: (event: CurationEventBody) => Promise<unknown>;
  /** event nodes, for label resolution and the add-node picker */
  nodes: () => EventNode[];
  graph: () => Graph;
}

type EdgeKey = { source: string; target: string; kind: EdgeKind };

export class GraphCanvas {
  root: HTMLElement;
  tooltip: string | null = null;
  dragSource: string | null = null;
  pendingEdge: { source: string; target: string } | null = null;
  selectedNode: string | null = null;
  selectedEdge: EdgeKey | null = null;
  addNodeOpen = false;
  editingNode = false;

  constructor(private deps: CanvasDeps) {
    this.root = el("div", { class: "graph-canvas" });
  }

  label(nodeId: string): string {
    const event = this.deps.nodes().find((node) => node.node_id === nodeId);
    if (event) {
      return event.label;
    }
    const graphNode = this.deps.graph().graph_nodes.find((node) => node.node_id === nodeId);
    return graphNode?.label ?? nodeId;
  }

  // -- gesture entry points (wired to DOM events, callable from tests) ------

  beginEdgeDrag(nodeId: string): void {
    this.dragSource = nodeId;
    this.render();
  }

  /** Complete a drag. Dropping on the source (or empty canvas) is a no-op
   * selection; dropping on another node opens the kind picker. */
  completeEdgeDrag(targetId: string | null): void {
    const source = this.dragSource;
    this.dragSource = null;
    if (source === null || targetId === null) {
      this.render();
      return;
    }
    if (targetId === source) {
      this.tooltip = "an edge cannot loop back onto its own node";
      this.selectedNode = source;
      this.selectedEdge = null;
      this.render();
      return;
    }
    this.pendingEdge = { source, target: targetId };
    this.render();
  }

  async confirmPendingEdge(kind: EdgeKind): Promise<void> {
    if (!this.pendingEdge) {
      return;
    }
    const event = gestureToEvent({ type: "draw-edge", ...this.pendingEdge, kind });
    this.pendingEdge = null;
    if (event) {
      await this.deps.post(event);
    }
    this.render();
  }

  cancelPendingEdge(): void {
    this.pendingEdge = null;
    this.render();
  }

  openAddNode(): void {
    this.addNodeOpen = true;
    this.render();
  }

  async confirmAddNode(selection: { label?: string; nodeId?: string }): Promise<void> {
    const event = gestureToEvent({ type: "add-node", ...selection });
    this.addNodeOpen = false;
    if (event) {
      await this.deps.post(event);
    }
    this.render();
  }

  selectNode(nodeId: string): void {
    this.selectedNode = nodeId;
    this.selectedEdge = null;
    this.editingNode = false;
    this.tooltip = null;
    this.render();
  }

  async confirmEditNode(fields: { subject?: string; verb?: string; object?: string | null }): Promise<void> {
    if (!this.selectedNode) {
      return;
    }
    const event = gestureToEvent({ type: "edit-node", nodeId: this.selectedNode, ...fields });
    this.editingNode = false;
    if (event) {
      await this.deps.post(event);
    }
    this.render();
  }

  selectEdge(key: EdgeKey): void {
    this.selectedEdge = key;
    this.selectedNode = null;
    this.tooltip = null;
    this.render();
  }

  async deleteSelectedNode(): Promise<void> {
    if (!this.selectedNode) {
      return;
    }
    const event = gestureToEvent({ type: "delete-node", nodeId: this.selectedNode });
    this.selectedNode = null;
    if (event) {
      await this.deps.post(event);
    }
    this.render();
  }

  async deleteSelectedEdge(): Promise<void> {
    if (!this.selectedEdge) {
      return;
    }
    const event = gestureToEvent({ type: "delete-edge", ...this.selectedEdge });
    this.selectedEdge = null;
    if (event) {
      await this.deps.post(event);
    }
    this.render();
  }

  async applyEdgeKind(newKind: EdgeKind): Promise<void> {
    if (!this.selectedEdge) {
      return;
    }
    const event = gestureToEvent({ type: "edit-edge", ...this.selectedEdge, newKind });
    this.selectedEdge = null;
    if (event) {
      await this.deps.post(event);
    }
    this.render();
  }

  // -- rendering -------------------------------------------------------------

  render(): void {
    clear(this.root);
    const graph = this.deps.graph();
    const positions = layoutPositions(graph);
    const width = Math.max(640, 190 * Math.max(1, ...[...positions.values()].map((p) => p.x / 190 + 1)));
    const height = Math.max(360, 130 * Math.max(1, ...[...positions.values()].map((p) => p.y / 130 + 1)));

    const svg = svgEl("svg", {
      class: "canvas-svg",
      width: String(width),
      height: String(height),
      ondblclick: () => this.openAddNode(),
    });

    svg.append(
      svgEl(
        "defs",
        {},
        svgEl(
          "marker",
          { id: "arrow", viewBox: "0 0 10 10", refX: "9", refY: "5", markerWidth: "7", markerHeight: "7", orient: "auto-start-reverse" },
          svgEl("path", { d: "M 0 0 L 10 5 L 0 10 z", fill: "#555" }),
        ),
      ),
    );

    for (const edge of graph.edges) {
      const from = positions.get(edge.source);
      const to = positions.get(edge.target);
      if (!from || !to) {
        continue;
      }
      const key: EdgeKey = { source: edge.source, target: edge.target, kind: edge.kind };
      const selected =
        this.selectedEdge &&
        this.selectedEdge.source === edge.source &&
        this.selectedEdge.target === edge.target &&
        this.selectedEdge.kind === edge.kind;
      svg.append(
        svgEl("line", {
          class: `edge edge-${edge.kind}${selected ? " edge-selected" : ""}`,
          "data-edge": `${edge.source}->${edge.target}:${edge.kind}`,
          x1: String(from.x),
          y1: String(from.y),
          x2: String(to.x),
          y2: String(to.y),
          "marker-end": "url(#arrow)",
          onclick: (event) => {
            event.stopPropagation();
            this.selectEdge(key);
          },
        }),
      );
    }

    for (const graphNode of graph.graph_nodes) {
      const position = positions.get(graphNode.node_id);
      if (!position) {
        continue;
      }
      const isExtra = graphNode.label !== null;
      const group = svgEl("g", {
        class: `node${this.selectedNode === graphNode.node_id ? " node-selected" : ""}`,
        "data-node": graphNode.node_id,
        transform: `translate(${position.x}, ${position.y})`,
        onmousedown: (event) => {
          event.stopPropagation();
          this.beginEdgeDrag(graphNode.node_id);
        },
        onmouseup: (event) => {
          event.stopPropagation();
          if (this.dragSource && this.dragSource !== graphNode.node_id) {
            this.completeEdgeDrag(graphNode.node_id);
          } else {
            this.dragSource = null;
            this.selectNode(graphNode.node_id);
          }
        },
      });
      group.append(
        svgEl("ellipse", { rx: "85", ry: "30", class: isExtra ? "node-extra" : "node-event" }),
        svgEl("text", { "text-anchor": "middle", dy: "5" }, truncate(this.label(graphNode.node_id), 24)),
      );
      svg.append(group);
    }

    svg.addEventListener("mouseup", () => {
      if (this.dragSource) {
        this.completeEdgeDrag(null);
      }
    });
    this.root.append(svg);
    this.renderPanels(graph);
  }

  private renderPanels(graph: Graph): void {
    const panel = el("div", { class: "canvas-panel" });
    if (this.tooltip) {
      panel.append(el("p", { class: "tooltip", id: "canvas-tooltip" }, this.tooltip));
      this.tooltip = null;
    }

    if (this.pendingEdge) {
      const kindSelect = el(
        "select",
        { id: "pending-edge-kind" },
        el("option", { value: "temporal" }, "temporal (source happens before target)"),
        el("option", { value: "hierarchical" }, "hierarchical (source is parent of target)"),
      ) as HTMLSelectElement;
      panel.append(
        el(
          "div",
          { class: "pending-edge", id: "pending-edge" },
          el("span", {}, `new edge: ${this.label(this.pendingEdge.source)} → ${this.label(this.pendingEdge.target)} `),
          kindSelect,
          el("button", { id: "pending-edge-confirm", onclick: () => void this.confirmPendingEdge(kindSelect.value as EdgeKind) }, "add edge"),
          el("button", { onclick: () => this.cancelPendingEdge() }, "cancel"),
        ),
      );
    }

    if (this.addNodeOpen) {
      const labelInput = el("input", { id: "add-node-label", placeholder: "label, e.g. the scenario name" }) as HTMLInputElement;
      const inGraph = new Set(graph.graph_nodes.map((node) => node.node_id));
      const candidates = this.deps.nodes().filter((node) => !inGraph.has(node.node_id));
      const picker = el(
        "select",
        { id: "add-node-existing" },
        el("option", { value: "" }, "— or pick an extracted node —"),
        ...candidates.map((node) => el("option", { value: node.node_id }, `${node.node_id}: ${node.label}`)),
      ) as HTMLSelectElement;
      panel.append(
        el(
          "div",
          { class: "add-node", id: "add-node-form" },
          labelInput,
          picker,
          el(
            "button",
            {
              id: "add-node-confirm",
              onclick: () =>
                void this.confirmAddNode(
                  picker.value ? { nodeId: picker.value } : { label: labelInput.value },
                ),
            },
            "add node",
          ),
          el("button", { onclick: () => { this.addNodeOpen = false; this.render(); } }, "cancel"),
        ),
      );
    }

    if (this.selectedNode) {
      const event = this.deps.nodes().find((node) => node.node_id === this.selectedNode);
      const details = el(
        "div",
        { class: "node-details", id: "node-details" },
        el("h4", {}, `node ${this.selectedNode}`),
        el("p", {}, event ? `${event.subject} / ${event.verb} / ${event.object ?? "—"}` : this.label(this.selectedNode)),
        el("button", { id: "delete-node", onclick: () => void this.deleteSelectedNode() }, "remove from graph"),
      );
      if (event && !this.editingNode) {
        details.append(
          el("button", { id: "edit-node", onclick: () => { this.editingNode = true; this.render(); } }, "edit"),
        );
      }
      if (event && this.editingNode) {
        const subject = el("input", { id: "edit-node-subject", value: event.subject }) as HTMLInputElement;
        const verb = el("input", { id: "edit-node-verb", value: event.verb }) as HTMLInputElement;
        const object = el("input", { id: "edit-node-object", value: event.object ?? "" }) as HTMLInputElement;
        details.append(
          subject,
          verb,
          object,
          el(
            "button",
            {
              id: "edit-node-confirm",
              onclick: () => {
                const fields: { subject?: string; verb?: string; object?: string | null } = {};
                if (subject.value.trim() !== event.subject) {
                  fields.subject = subject.value.trim();
                }
                if (verb.value.trim() !== event.verb) {
                  fields.verb = verb.value.trim();
                }
                const objectValue = object.value.trim() || null;
                if (objectValue !== event.object) {
                  fields.object = objectValue;
                }
                void this.confirmEditNode(fields);
              },
            },
            "confirm",
          ),
          el("button", { onclick: () => { this.editingNode = false; this.render(); } }, "cancel"),
        );
      }
      panel.append(details);
    }

    if (this.selectedEdge) {
      const other = this.selectedEdge.kind === "temporal" ? "hierarchical" : "temporal";
      panel.append(
        el(
          "div",
          { class: "edge-details", id: "edge-details" },
          el("h4", {}, `${this.selectedEdge.kind} edge ${this.selectedEdge.source} → ${this.selectedEdge.target}`),
          el("button", { id: "edge-flip-kind", onclick: () => void this.applyEdgeKind(other as EdgeKind) }, `make ${other}`),
          el("button", { id: "edge-delete", onclick: () => void this.deleteSelectedEdge() }, "delete edge"),
        ),
      );
    }

    this.root.append(panel);
  }
}

function truncate(text: string, max: number): string {
  return text.length <= max ? text : `${text.slice(0, max - 1)}…`;
}
