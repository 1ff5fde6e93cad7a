/** Error taxonomy for the exporter; every failure is one of these. */

export class ExporterError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

export class ConfigError extends ExporterError {}

export class ManifestError extends ExporterError {}

export class MissingImage extends ExporterError {
  readonly id: string;
  constructor(id: string, path: string) {
    super(`image for record '${id}' not found: ${path}`);
    this.id = id;
  }
}

export class UnsupportedImage extends ExporterError {}

export class BackboneLoadError extends ExporterError {}
