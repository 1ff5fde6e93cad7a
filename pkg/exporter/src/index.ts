export {
  Backbone,
  DEFAULT_BACKBONE,
  loadBackbone,
  saveLayersModel,
} from "./backbone";
export {
  BackboneLoadError,
  ConfigError,
  ExporterError,
  ManifestError,
  MissingImage,
  UnsupportedImage,
} from "./errors";
export { EXPORT_DEFAULTS, ExportConfig, ExportResult, exportDescriptors } from "./export";
export { gemPool, l2Normalize } from "./gem";
export { ManifestRecord, readManifest, resolveImagePath } from "./manifest";
export { RgbImage, decodePng } from "./png";
export {
  Entry,
  Metadata,
  writeEmbeddingsBinary,
  writeEmbeddingsJsonl,
  writeMetadata,
} from "./writer";
