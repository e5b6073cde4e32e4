// Wire types mirroring the service's JSON documents.

export interface CatalogEntry {
  id: string;
  display_name: string;
  polarity: 1 | -1;
  extractor: string | null;
  excluded: boolean;
  exclusion_reason: string | null;
  has_data: boolean;
}

export interface CatalogDoc {
  features: CatalogEntry[];
}

export interface WeightsDoc {
  source: string;
  weights: Record<string, number>;
}

export interface ZoneProperties {
  zone_id: string;
  mean_score: number | null;
  point_count: number;
  percentile_rank: number | null;
}

export interface ZoneFeature {
  type: 'Feature';
  geometry: { type: 'Polygon'; coordinates: number[][][] };
  properties: ZoneProperties;
}

export interface ZoneCollection {
  type: 'FeatureCollection';
  features: ZoneFeature[];
}

export interface ProfileRequest {
  name: string;
  included_features: string[];
  polarity_overrides: Record<string, 1 | -1>;
  extractor_param_overrides: Record<string, Record<string, number>>;
}

export interface ProfileSummary {
  graph_score: number;
  scored_points: number;
  max_min_zone_ratio: number | null;
}

export interface ProfileResponse {
  profile_token: string;
  profile: ProfileRequest & { weight_source: string };
  missing_policy: string;
  weights: WeightsDoc;
  zones: ZoneProperties[];
  summary: ProfileSummary;
}

export interface FieldError {
  field: string;
  message: string;
}
