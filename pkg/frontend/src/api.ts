// Service client. The console performs no score math of its own: every
// number it shows comes out of one of these calls.

import type {
  CatalogDoc,
  FieldError,
  ProfileRequest,
  ProfileResponse,
  WeightsDoc,
  ZoneCollection,
} from './types.js';

export class ServiceError extends Error {
  status: number;
  fieldErrors: FieldError[];

  constructor(status: number, message: string, fieldErrors: FieldError[] = []) {
    super(message);
    this.status = status;
    this.fieldErrors = fieldErrors;
  }
}

async function parseError(res: Response): Promise<ServiceError> {
  let detail = `service error ${res.status}`;
  let fields: FieldError[] = [];
  try {
    const body = await res.json();
    if (Array.isArray(body.errors)) {
      fields = body.errors as FieldError[];
      detail = fields.map((e) => `${e.field}: ${e.message}`).join('; ');
    } else if (typeof body.detail === 'string') {
      detail = body.detail;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  return new ServiceError(res.status, detail, fields);
}

export class ServiceClient {
  constructor(private baseUrl: string = '') {}

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(this.baseUrl + path);
    if (!res.ok) throw await parseError(res);
    return (await res.json()) as T;
  }

  getCatalog(): Promise<CatalogDoc> {
    return this.get('/catalog');
  }

  getWeights(): Promise<WeightsDoc> {
    return this.get('/weights');
  }

  getZones(profileToken?: string): Promise<ZoneCollection> {
    const q = profileToken ? `?profile=${encodeURIComponent(profileToken)}` : '';
    return this.get(`/zones${q}`);
  }

  async postProfile(req: ProfileRequest, signal?: AbortSignal): Promise<ProfileResponse> {
    const res = await fetch(this.baseUrl + '/profile', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(req),
      signal,
    });
    if (!res.ok) throw await parseError(res);
    return (await res.json()) as ProfileResponse;
  }
}
