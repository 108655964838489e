/** Session store: the latest server snapshot plus transient UI status.
 *
 * The server is the source of truth. Commits post queued events in action
 * order, then re-sync; nothing is rendered from local state after a commit.
 * Event posts for one session are serialized through a single chain so two
 * buttons can never interleave their batches.
 */

import { ApiClient, ApiError } from "./api.js";
import type { CurationEventBody, Job, SessionSnapshot, Stage } from "./types.js";

export type Listener = () => void;

export class SessionStore {
  snapshot: SessionSnapshot | null = null;
  runningJob: Job | null = null;
  banner: string | null = null;
  lastWarnings: string[] = [];

  private listeners: Listener[] = [];
  private postChain: Promise<unknown> = Promise.resolve();

  constructor(
    public api: ApiClient,
    public sessionId: string,
  ) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((entry) => entry !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  setBanner(message: string | null): void {
    this.banner = message;
    this.emit();
  }

  async refresh(): Promise<SessionSnapshot> {
    this.snapshot = await this.api.getSession(this.sessionId);
    this.emit();
    return this.snapshot;
  }

  /** Post a batch of curation events in order, then re-sync.
   *
   * Returns the number of events actually posted. A failed event stops the
   * batch (never retried silently) and raises the error banner; whatever the
   * server already applied stays applied, which the re-sync reflects.
   */
  async commit(events: CurationEventBody[]): Promise<number> {
    const run = this.postChain.then(async () => {
      let posted = 0;
      try {
        for (const event of events) {
          await this.api.postEvent(this.sessionId, event);
          posted += 1;
        }
        this.banner = null;
      } catch (error) {
        this.banner = error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
      }
      await this.refresh();
      return posted;
    });
    this.postChain = run.catch(() => undefined);
    return run;
  }

  get busy(): boolean {
    return this.runningJob !== null;
  }

  /** Start a stage job and poll it to completion. */
  async runStage(stage: Stage, params: Record<string, unknown>): Promise<Job | null> {
    if (this.runningJob) {
      this.setBanner("a stage job is already running for this session");
      return null;
    }
    try {
      const { job_id } = await this.api.startStage(this.sessionId, stage, params);
      this.runningJob = { job_id, session_id: this.sessionId, stage, status: "running", progress: { done: 0, total: 0 } };
      this.emit();
      const job = await this.api.pollJob(job_id, (update) => {
        this.runningJob = update;
        this.emit();
      });
      this.lastWarnings = job.result?.warnings ?? [];
      this.banner = null;
      return job;
    } catch (error) {
      this.banner = error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
      return null;
    } finally {
      this.runningJob = null;
      await this.refresh();
    }
  }
}
