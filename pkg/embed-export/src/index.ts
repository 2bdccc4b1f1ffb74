export { writeEmb1, readEmb1, EmbeddingRecord, EMB1_MAGIC, EMB1_VERSION } from './emb1'
export { loadImage, decodePng, decodePpm, RgbImage } from './image'
export { patchStatsEncoder, clipEncoder, resolveEncoder, Encoder } from './encoders'
export { parseImagesCsv, runExport, ExportJob, ExportResult } from './export'
