/** Thin typed client over the comparison-service endpoints. */

import type {
  AccuracyPayload,
  ClassStatsPayload,
  DatasetManifestPayload,
  HierarchyPayload,
  ModelsPayload,
  ProjectionPayload,
  ResultsPayload,
  SimilarityMeasure,
  SimilarityPayload,
  TaskSpec,
  TaskStatusPayload,
  ThresholdPayload,
} from "./types";

export interface ResultsQuery {
  sort_by?: string;
  order?: "asc" | "desc";
  filter?: string;
  page?: number;
  page_size?: number;
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  artifactUrl(token: string): string {
    return `${this.base}/artifacts/${token}`;
  }

  imageUrl(imageRef: string): string {
    return `${this.base}/images/${imageRef}`;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.base + path, init);
    if (!resp.ok) {
      let detail = `${resp.status}`;
      try {
        const body = await resp.json();
        detail = body.message ?? JSON.stringify(body);
      } catch {
        /* non-JSON error body */
      }
      throw new Error(`${path}: ${detail}`);
    }
    return (await resp.json()) as T;
  }

  models(): Promise<ModelsPayload> {
    return this.request("/models");
  }

  projection(modelId: string): Promise<ProjectionPayload> {
    return this.request(`/models/${modelId}/projection`);
  }

  accuracy(modelId: string): Promise<AccuracyPayload> {
    return this.request(`/models/${modelId}/accuracy`);
  }

  classStats(k?: number): Promise<ClassStatsPayload> {
    const suffix = k ? `?k=${k}` : "";
    return this.request(`/stats/classes${suffix}`);
  }

  hierarchy(): Promise<HierarchyPayload> {
    return this.request("/hierarchy");
  }

  datasetManifest(): Promise<DatasetManifestPayload> {
    return this.request("/dataset/manifest");
  }

  async createTask(spec: TaskSpec): Promise<string> {
    const body = await this.request<{ task_id: string }>("/tasks", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(spec),
    });
    return body.task_id;
  }

  taskStatus(taskId: string): Promise<TaskStatusPayload> {
    return this.request(`/tasks/${taskId}`);
  }

  taskResults(taskId: string, query: ResultsQuery = {}): Promise<ResultsPayload> {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(query)) {
      if (value !== undefined && value !== "") params.set(key, String(value));
    }
    const qs = params.toString();
    return this.request(`/tasks/${taskId}/results${qs ? "?" + qs : ""}`);
  }

  similarity(taskId: string, measure?: SimilarityMeasure): Promise<SimilarityPayload> {
    const suffix = measure ? `?measure=${measure}` : "";
    return this.request(`/tasks/${taskId}/similarity${suffix}`);
  }

  setThreshold(taskId: string, threshold: number): Promise<ThresholdPayload> {
    return this.request(`/tasks/${taskId}/threshold`, {
      method: "PATCH",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ threshold }),
    });
  }

  artifactJson<T>(token: string): Promise<T> {
    return this.request(`/artifacts/${token}`);
  }
}
