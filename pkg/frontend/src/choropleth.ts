// SVG choropleth of zone aggregates. Zones are planar polygons in meters;
// the layer maps them into the viewBox directly (y flipped).

import { NO_DATA_COLOR, rankColor } from './colors.js';
import type { ZoneCollection, ZoneFeature } from './types.js';

const SVG_NS = 'http://www.w3.org/2000/svg';

export interface ChoroplethLayer {
  svg: SVGSVGElement;
  highlight(zoneIds: string[]): void;
  panTo(zoneId: string): void;
}

interface Bounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

function bounds(zones: ZoneCollection): Bounds {
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const f of zones.features) {
    for (const ring of f.geometry.coordinates) {
      for (const [x, y] of ring) {
        minX = Math.min(minX, x);
        minY = Math.min(minY, y);
        maxX = Math.max(maxX, x);
        maxY = Math.max(maxY, y);
      }
    }
  }
  return { minX, minY, maxX, maxY };
}

function pathFor(feature: ZoneFeature, b: Bounds): string {
  const parts: string[] = [];
  for (const ring of feature.geometry.coordinates) {
    const cmds = ring.map(([x, y], i) => {
      const sx = x - b.minX;
      const sy = b.maxY - y; // flip: north up
      return `${i === 0 ? 'M' : 'L'}${sx},${sy}`;
    });
    parts.push(cmds.join(' ') + ' Z');
  }
  return parts.join(' ');
}

function hoverText(f: ZoneFeature): string {
  const p = f.properties;
  if (p.mean_score === null) return `${p.zone_id}: no data`;
  return `${p.zone_id}: mean ${p.mean_score}, ${p.point_count} points`;
}

export function renderChoropleth(
  container: HTMLElement,
  zones: ZoneCollection,
  onZoneClick?: (zoneId: string) => void,
): ChoroplethLayer {
  const doc = container.ownerDocument;
  const b = bounds(zones);
  const svg = doc.createElementNS(SVG_NS, 'svg') as SVGSVGElement;
  const width = b.maxX - b.minX;
  const height = b.maxY - b.minY;
  svg.setAttribute('viewBox', `0 0 ${width} ${height}`);
  svg.setAttribute('class', 'choropleth');

  const byId = new Map<string, SVGPathElement>();
  for (const f of zones.features) {
    const path = doc.createElementNS(SVG_NS, 'path') as SVGPathElement;
    path.setAttribute('d', pathFor(f, b));
    path.setAttribute(
      'fill',
      f.properties.percentile_rank === null ? NO_DATA_COLOR : rankColor(f.properties.percentile_rank),
    );
    path.setAttribute('stroke', '#555');
    path.setAttribute('stroke-width', String(Math.max(width, height) / 400));
    path.setAttribute('data-zone-id', f.properties.zone_id);
    const title = doc.createElementNS(SVG_NS, 'title');
    title.textContent = hoverText(f);
    path.appendChild(title);
    if (onZoneClick) {
      path.addEventListener('click', () => onZoneClick(f.properties.zone_id));
    }
    svg.appendChild(path);
    byId.set(f.properties.zone_id, path);
  }

  container.replaceChildren(svg);

  return {
    svg,
    highlight(zoneIds: string[]): void {
      const wanted = new Set(zoneIds);
      for (const [zid, path] of byId) {
        path.setAttribute('stroke', wanted.has(zid) ? '#000' : '#555');
        path.setAttribute(
          'stroke-width',
          String((Math.max(width, height) / 400) * (wanted.has(zid) ? 3 : 1)),
        );
      }
    },
    panTo(zoneId: string): void {
      const feature = zones.features.find((f) => f.properties.zone_id === zoneId);
      if (!feature) return;
      const zb = bounds({ type: 'FeatureCollection', features: [feature] });
      const cx = (zb.minX + zb.maxX) / 2 - b.minX;
      const cy = b.maxY - (zb.minY + zb.maxY) / 2;
      const w = Math.max(zb.maxX - zb.minX, 1) * 3;
      const h = Math.max(zb.maxY - zb.minY, 1) * 3;
      svg.setAttribute('viewBox', `${cx - w / 2} ${cy - h / 2} ${w} ${h}`);
    },
  };
}
