/** Thin typed client for the explanation service; every rendered number in
 * the UI originates from these calls. */

import type {
  Covariates,
  ImportanceResponse,
  ModelsResponse,
  NeighborsResponse,
  PdpResponse,
  PredictResponse,
  RadarResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null,
    readonly detail: unknown = null,
  ) {
    super(message);
  }

  get isValidation(): boolean {
    return this.status === 422;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, init);
  } catch (err) {
    throw new ApiError(`service unreachable: ${String(err)}`, null);
  }
  if (!response.ok) {
    let detail: unknown = null;
    try {
      detail = (await response.json()).detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(`HTTP ${response.status}`, response.status, detail);
  }
  return (await response.json()) as T;
}

export class ServiceApi {
  constructor(readonly baseUrl: string) {}

  private post<T>(path: string, body: unknown): Promise<T> {
    return request<T>(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  models(): Promise<ModelsResponse> {
    return request<ModelsResponse>(this.baseUrl + "/models");
  }

  predict(modelId: string, covariates: Covariates): Promise<PredictResponse> {
    return this.post(`/models/${modelId}/predict`, { covariates });
  }

  radar(
    modelId: string,
    covariates: Covariates,
    includeNeighbor: boolean,
  ): Promise<RadarResponse> {
    return this.post(`/models/${modelId}/explain/radar`, {
      covariates,
      include_neighbor: includeNeighbor,
    });
  }

  pdp(
    modelId: string,
    covariates: Covariates,
    features?: string[],
  ): Promise<PdpResponse> {
    const body: Record<string, unknown> = { covariates };
    if (features) body.features = features;
    return this.post(`/models/${modelId}/explain/pdp`, body);
  }

  neighbors(
    modelId: string,
    covariates: Covariates,
    k: number,
  ): Promise<NeighborsResponse> {
    return this.post(`/models/${modelId}/neighbors`, { covariates, k });
  }

  importance(modelId: string): Promise<ImportanceResponse> {
    return request<ImportanceResponse>(
      this.baseUrl + `/models/${modelId}/importance`,
    );
  }
}
