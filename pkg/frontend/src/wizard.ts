/** Four-stage curation wizard.
 *
 * Each stage view renders from the latest server snapshot plus a queue of
 * uncommitted local edits. Selection toggles are optimistic (checkbox flips,
 * event queued); text edits are pessimistic (inline form, confirm queues the
 * rewrite, text updates only after the server round-trip). Save posts the
 * queue one event per user action, in action order, then re-syncs — zero
 * changes means zero events posted.
 */

import { GraphCanvas } from "./canvas.js";
import { clear, el } from "./dom.js";
import { SessionStore } from "./state.js";
import type { CurationEventBody, EventNode, GroundingState, Stage, Step } from "./types.js";

const STAGE_LABELS: Record<Stage, string> = {
  "step-generation": "1 · Steps",
  "node-extraction": "2 · Nodes",
  "graph-construction": "3 · Graph",
  grounding: "4 · Grounding",
};

const STEP_TEMPLATES = ["sub-steps", "steps", "events-before", "events-after"];

export class Wizard {
  root: HTMLElement;
  activeStage: Stage = "step-generation";
  showExport = false;
  exportText: string | null = null;

  // queued-but-uncommitted edits per stage view
  stepQueue: CurationEventBody[] = [];
  stepOverrides = new Map<string, boolean>();
  stepEditing: string | null = null;
  nodeQueue: CurationEventBody[] = [];
  nodeOverrides = new Map<string, boolean>();
  nodeEditing: string | null = null;

  canvas: GraphCanvas;

  constructor(public store: SessionStore) {
    this.root = el("div", { class: "wizard" });
    this.canvas = new GraphCanvas({
      post: (event) => this.store.commit([event]),
      nodes: () => this.store.snapshot?.nodes ?? [],
      graph: () => this.store.snapshot?.graph ?? { graph_nodes: [], edges: [], same_time: [] },
    });
    store.subscribe(() => this.render());
  }

  // -- shared ---------------------------------------------------------------

  private queueFor(stage: "step" | "node"): CurationEventBody[] {
    return stage === "step" ? this.stepQueue : this.nodeQueue;
  }

  private async flush(stage: "step" | "node"): Promise<void> {
    const queue = this.queueFor(stage);
    const events = queue.splice(0, queue.length);
    if (stage === "step") {
      this.stepOverrides.clear();
      this.stepEditing = null;
    } else {
      this.nodeOverrides.clear();
      this.nodeEditing = null;
    }
    if (events.length === 0) {
      this.render(); // nothing queued: zero events posted
      return;
    }
    await this.store.commit(events);
  }

  render(): void {
    clear(this.root);
    const snapshot = this.store.snapshot;
    if (!snapshot) {
      this.root.append(el("p", {}, "loading session…"));
      return;
    }

    const tabs = el(
      "nav",
      { class: "stage-tabs" },
      ...(Object.keys(STAGE_LABELS) as Stage[]).map((stage) =>
        el(
          "button",
          {
            class: `tab${this.activeStage === stage ? " tab-active" : ""}`,
            "data-stage-tab": stage,
            onclick: () => {
              this.activeStage = stage;
              this.showExport = false;
              this.render();
            },
          },
          STAGE_LABELS[stage],
        ),
      ),
      el(
        "button",
        {
          class: `tab${this.showExport ? " tab-active" : ""}`,
          id: "tab-export",
          onclick: () => {
            this.showExport = true;
            this.render();
          },
        },
        "Export",
      ),
    );

    const job = this.store.runningJob;
    const status = el(
      "div",
      { class: "status-bar" },
      el("span", { class: "scenario" }, `scenario: ${snapshot.scenario}`),
      el("span", { class: "session-id" }, `session: ${snapshot.session_id}`),
      job
        ? el(
            "span",
            { class: "job-progress", id: "job-progress" },
            `${job.stage} running… ${job.progress.done}/${job.progress.total || "?"}`,
          )
        : null,
    );

    this.root.append(status, tabs);

    if (this.store.banner) {
      this.root.append(el("div", { class: "banner", id: "error-banner" }, this.store.banner));
    }
    if (this.store.lastWarnings.length) {
      this.root.append(
        el(
          "div",
          { class: "warnings", id: "warning-banner" },
          ...this.store.lastWarnings.map((warning) => el("p", {}, `⚠ ${warning}`)),
        ),
      );
    }

    if (this.showExport) {
      this.root.append(this.renderExport());
      return;
    }
    switch (this.activeStage) {
      case "step-generation":
        this.root.append(this.renderSteps(snapshot.steps));
        break;
      case "node-extraction":
        this.root.append(this.renderNodes(snapshot.nodes));
        break;
      case "graph-construction":
        this.root.append(this.renderGraph());
        break;
      case "grounding":
        this.root.append(this.renderGrounding());
        break;
    }
  }

  // -- stage 1: steps ---------------------------------------------------------

  private renderSteps(steps: Step[]): HTMLElement {
    const busy = this.store.busy;
    const templateSelect = el(
      "select",
      { id: "steps-template" },
      ...STEP_TEMPLATES.map((id) => el("option", { value: id }, id)),
    ) as HTMLSelectElement;
    const countInput = el("input", {
      id: "steps-count",
      type: "number",
      min: "1",
      placeholder: "max",
    }) as HTMLInputElement;

    const controls = el(
      "div",
      { class: "stage-controls" },
      templateSelect,
      countInput,
      el(
        "button",
        {
          id: "steps-generate",
          disabled: busy,
          onclick: () =>
            void this.store.runStage("step-generation", {
              template_id: templateSelect.value,
              ...(countInput.value ? { count: Number(countInput.value) } : {}),
            }),
        },
        "Generate steps",
      ),
      el("button", { id: "steps-save", onclick: () => void this.flush("step") }, "Save"),
      el("span", { class: "queue-size" }, this.stepQueue.length ? `${this.stepQueue.length} pending` : ""),
    );

    const list = el("ul", { class: "step-list", id: "step-list" });
    for (const step of steps) {
      const selected = this.stepOverrides.get(step.step_id) ?? step.selected;
      const row = el("li", { class: "step-row", "data-step-id": step.step_id });
      const checkbox = el("input", {
        type: "checkbox",
        class: "step-check",
        checked: selected,
        onchange: () => {
          const next = (checkbox as HTMLInputElement).checked;
          this.stepOverrides.set(step.step_id, next);
          this.stepQueue.push({
            action: "select-step",
            payload: { step_id: step.step_id, selected: next },
          });
          this.render();
        },
      }) as HTMLInputElement;
      row.append(checkbox, el("span", { class: "step-text" }, step.text), el("span", { class: "prov" }, step.provenance));

      if (this.stepEditing === step.step_id) {
        const input = el("input", { class: "step-edit-input", value: step.text }) as HTMLInputElement;
        row.append(
          input,
          el(
            "button",
            {
              class: "step-edit-save",
              onclick: () => {
                const text = input.value.trim();
                if (text && text !== step.text) {
                  this.stepQueue.push({ action: "edit-step", payload: { step_id: step.step_id, text } });
                }
                this.stepEditing = null;
                this.render();
              },
            },
            "confirm",
          ),
          el("button", { onclick: () => { this.stepEditing = null; this.render(); } }, "cancel"),
        );
      } else {
        row.append(
          el("button", { class: "step-edit", onclick: () => { this.stepEditing = step.step_id; this.render(); } }, "edit"),
          el(
            "button",
            {
              class: "step-delete",
              onclick: () => {
                this.stepQueue.push({ action: "delete-step", payload: { step_id: step.step_id } });
                this.render();
              },
            },
            "delete",
          ),
        );
      }
      list.append(row);
    }

    const addInput = el("input", { id: "steps-add-input", placeholder: "add a step…" }) as HTMLInputElement;
    const addRow = el(
      "div",
      { class: "add-row" },
      addInput,
      el(
        "button",
        {
          id: "steps-add-btn",
          onclick: () => {
            const text = addInput.value.trim();
            if (text) {
              this.stepQueue.push({ action: "add-step", payload: { text } });
              addInput.value = "";
              this.render();
            }
          },
        },
        "queue add",
      ),
    );

    return el("section", { class: "stage stage-steps" }, controls, list, addRow);
  }

  // -- stage 2: nodes ----------------------------------------------------------

  private renderNodes(nodes: EventNode[]): HTMLElement {
    const busy = this.store.busy;
    const controls = el(
      "div",
      { class: "stage-controls" },
      el(
        "button",
        {
          id: "nodes-extract",
          disabled: busy,
          onclick: () => void this.store.runStage("node-extraction", { method: "llm" }),
        },
        "Extract nodes from selected steps",
      ),
      el("button", { id: "nodes-save", onclick: () => void this.flush("node") }, "Save"),
      el("span", { class: "queue-size" }, this.nodeQueue.length ? `${this.nodeQueue.length} pending` : ""),
    );

    const table = el("table", { class: "node-table", id: "node-table" });
    table.append(
      el(
        "tr",
        {},
        el("th", {}, ""),
        el("th", {}, "subject"),
        el("th", {}, "verb"),
        el("th", {}, "object"),
        el("th", {}, "label"),
        el("th", {}, ""),
      ),
    );
    for (const node of nodes) {
      const selected = this.nodeOverrides.get(node.node_id) ?? node.selected;
      const row = el("tr", { class: "node-row", "data-node-id": node.node_id });
      const checkbox = el("input", {
        type: "checkbox",
        class: "node-check",
        checked: selected,
        onchange: () => {
          const next = (checkbox as HTMLInputElement).checked;
          this.nodeOverrides.set(node.node_id, next);
          this.nodeQueue.push({
            action: "select-node",
            payload: { node_id: node.node_id, selected: next },
          });
          this.render();
        },
      }) as HTMLInputElement;
      row.append(el("td", {}, checkbox));

      if (this.nodeEditing === node.node_id) {
        const subject = el("input", { class: "node-edit-subject", value: node.subject }) as HTMLInputElement;
        const verb = el("input", { class: "node-edit-verb", value: node.verb }) as HTMLInputElement;
        const object = el("input", { class: "node-edit-object", value: node.object ?? "" }) as HTMLInputElement;
        row.append(
          el("td", {}, subject),
          el("td", {}, verb),
          el("td", {}, object),
          el("td", { class: "node-label" }, node.label),
          el(
            "td",
            {},
            el(
              "button",
              {
                class: "node-edit-save",
                onclick: () => {
                  const payload: Record<string, unknown> = { node_id: node.node_id };
                  if (subject.value.trim() !== node.subject) payload.subject = subject.value.trim();
                  if (verb.value.trim() !== node.verb) payload.verb = verb.value.trim();
                  const objectValue = object.value.trim() || null;
                  if (objectValue !== node.object) payload.object = objectValue;
                  if (Object.keys(payload).length > 1) {
                    this.nodeQueue.push({ action: "edit-node", payload });
                  }
                  this.nodeEditing = null;
                  this.render();
                },
              },
              "confirm",
            ),
            el("button", { onclick: () => { this.nodeEditing = null; this.render(); } }, "cancel"),
          ),
        );
      } else {
        row.append(
          el("td", { class: "node-subject" }, node.subject),
          el("td", { class: "node-verb" }, node.verb),
          el("td", { class: "node-object" }, node.object ?? "—"),
          el("td", { class: "node-label" }, node.label + (node.orphaned ? " (orphaned)" : "")),
          el(
            "td",
            {},
            el("button", { class: "node-edit", onclick: () => { this.nodeEditing = node.node_id; this.render(); } }, "edit"),
            el(
              "button",
              {
                class: "node-delete",
                onclick: () => {
                  this.nodeQueue.push({ action: "delete-node", payload: { node_id: node.node_id } });
                  this.render();
                },
              },
              "delete",
            ),
          ),
        );
      }
      table.append(row);
    }

    const subjectInput = el("input", { id: "nodes-add-subject", placeholder: "subject" }) as HTMLInputElement;
    const verbInput = el("input", { id: "nodes-add-verb", placeholder: "verb" }) as HTMLInputElement;
    const objectInput = el("input", { id: "nodes-add-object", placeholder: "object (optional)" }) as HTMLInputElement;
    const addRow = el(
      "div",
      { class: "add-row" },
      subjectInput,
      verbInput,
      objectInput,
      el(
        "button",
        {
          id: "nodes-add-btn",
          onclick: () => {
            if (subjectInput.value.trim() && verbInput.value.trim()) {
              this.nodeQueue.push({
                action: "add-node",
                payload: {
                  subject: subjectInput.value.trim(),
                  verb: verbInput.value.trim(),
                  object: objectInput.value.trim() || null,
                },
              });
              subjectInput.value = verbInput.value = objectInput.value = "";
              this.render();
            }
          },
        },
        "queue add",
      ),
    );

    return el("section", { class: "stage stage-nodes" }, controls, table, addRow);
  }

  // -- stage 3: graph -----------------------------------------------------------

  private renderGraph(): HTMLElement {
    const busy = this.store.busy;
    const controls = el(
      "div",
      { class: "stage-controls" },
      el(
        "button",
        {
          id: "graph-build",
          disabled: busy,
          onclick: () => void this.store.runStage("graph-construction", {}),
        },
        "Build graph from selected nodes",
      ),
      el("span", { class: "hint" }, "double-click canvas: add node · drag node→node: add edge · click: edit"),
    );
    this.canvas.render();
    return el("section", { class: "stage stage-graph" }, controls, this.canvas.root);
  }

  // -- stage 4: grounding ---------------------------------------------------------

  private renderGrounding(): HTMLElement {
    const snapshot = this.store.snapshot!;
    const busy = this.store.busy;
    const inGraph = snapshot.graph.graph_nodes.map((graphNode) => graphNode.node_id);
    const targets = snapshot.nodes.filter((node) => inGraph.includes(node.node_id));
    const section = el("section", { class: "stage stage-grounding" });
    if (targets.length === 0) {
      section.append(el("p", {}, "no event nodes in the graph yet — build the graph first"));
      return section;
    }

    for (const node of targets) {
      const state: GroundingState | undefined = snapshot.groundings[node.node_id];
      const card = el("div", { class: "ground-row", "data-ground-node": node.node_id });
      const methodSelect = el(
        "select",
        { class: "ground-method" },
        el("option", { value: "similarity" }, "similarity (embeddings)"),
        el("option", { value: "inference" }, "inference (LLM + entailment)"),
      ) as HTMLSelectElement;
      const kInput = el("input", { class: "ground-k", type: "number", min: "1", value: "3" }) as HTMLInputElement;

      const header = el(
        "div",
        { class: "ground-header" },
        el("strong", { class: "ground-label" }, node.label),
        state?.chosen_xpo_id
          ? el("span", { class: "chosen-badge" }, `grounded: ${state.chosen_xpo_id}`)
          : el("span", { class: "chosen-badge chosen-none" }, "not grounded"),
        methodSelect,
        kInput,
        el(
          "button",
          {
            class: "ground-query",
            disabled: busy,
            onclick: () =>
              void this.store.runStage("grounding", {
                node_id: node.node_id,
                method: methodSelect.value,
                k: Number(kInput.value) || 3,
              }),
          },
          "Query",
        ),
      );
      card.append(header);

      const lastQuery = state?.queries.length ? state.queries[state.queries.length - 1] : null;
      if (lastQuery) {
        if (lastQuery.candidates.length === 0) {
          card.append(
            el(
              "p",
              { class: "no-candidates" },
              `no candidates from ${lastQuery.method} grounding — try the other method`,
            ),
          );
        } else {
          const cards = el("div", { class: "cand-cards" });
          for (const candidate of lastQuery.candidates) {
            cards.append(
              el(
                "div",
                { class: "cand-card", "data-xpo": candidate.xpo_id },
                el("span", { class: "cand-rank" }, `#${candidate.rank}`),
                el("strong", { class: "cand-name" }, candidate.name),
                el("span", { class: "cand-method" }, candidate.method),
                el("span", { class: "cand-score" }, candidate.score.toFixed(3)),
                el("p", { class: "cand-def" }, candidate.definition),
                el(
                  "button",
                  {
                    class: "cand-choose",
                    onclick: () =>
                      void this.store.commit([
                        {
                          action: "choose-grounding",
                          payload: { node_id: node.node_id, xpo_id: candidate.xpo_id },
                        },
                      ]),
                  },
                  "choose",
                ),
              ),
            );
          }
          card.append(cards);
        }
      }
      section.append(card);
    }
    return section;
  }

  // -- export -------------------------------------------------------------------

  private renderExport(): HTMLElement {
    const section = el("section", { class: "stage stage-export" });
    section.append(
      el(
        "button",
        {
          id: "export-fetch",
          onclick: () =>
            void (async () => {
              try {
                const doc = await this.store.api.getExport(this.store.sessionId);
                this.exportText = JSON.stringify(doc, null, 2);
                this.store.setBanner(null);
              } catch (error) {
                this.exportText = null;
                this.store.setBanner(String(error));
              }
              this.render();
            })(),
        },
        "Fetch export document",
      ),
    );
    if (this.exportText) {
      section.append(el("pre", { id: "export-json" }, this.exportText));
    }
    return section;
  }
}
