/**
 * The export job: read an images manifest (CSV with columns id,path), run
 * the encoder over every decodable image, and write one EMB1 file. Images
 * that fail to decode are skipped and reported in a failures list; ids keep
 * their input order in the output file.
 */

import { readFileSync, writeFileSync } from 'fs'
import { dirname, resolve } from 'path'

import { writeEmb1, EmbeddingRecord } from './emb1'
import { Encoder } from './encoders'
import { loadImage } from './image'

export interface ImageEntry {
  id: string
  path: string
}

export interface ExportJob {
  images: ImageEntry[]
  encoder: Encoder
  outPath: string
}

export interface ExportResult {
  written: number
  dim: number
  failures: { id: string; path: string; error: string }[]
}

/** Parse the images CSV: header "id,path", one entry per line. */
export function parseImagesCsv(csvPath: string): ImageEntry[] {
  const text = readFileSync(csvPath, 'utf-8')
  const lines = text.split(/\r?\n/).filter(l => l.trim().length > 0)
  if (lines.length === 0) {
    throw new Error(`${csvPath}: empty images manifest`)
  }
  const header = lines[0].split(',').map(c => c.trim())
  if (header[0] !== 'id' || header[1] !== 'path') {
    throw new Error(`${csvPath}: expected header "id,path", got "${lines[0]}"`)
  }
  const base = dirname(resolve(csvPath))
  return lines.slice(1).map((line, i) => {
    const comma = line.indexOf(',')
    if (comma < 0) {
      throw new Error(`${csvPath}: line ${i + 2}: expected "id,path"`)
    }
    const id = line.slice(0, comma).trim()
    const rawPath = line.slice(comma + 1).trim()
    if (!id || !rawPath) {
      throw new Error(`${csvPath}: line ${i + 2}: empty id or path`)
    }
    return { id, path: resolve(base, rawPath) }
  })
}

export async function runExport(job: ExportJob): Promise<ExportResult> {
  if (job.images.length === 0) {
    throw new Error('no images to export')
  }
  const records: EmbeddingRecord[] = []
  const failures: ExportResult['failures'] = []
  for (const entry of job.images) {
    let image
    try {
      image = loadImage(entry.path)
    } catch (err) {
      failures.push({ id: entry.id, path: entry.path, error: String(err) })
      continue
    }
    const vector = await job.encoder.encode(image)
    if (vector.length !== job.encoder.dim) {
      throw new Error(
        `encoder ${job.encoder.name} returned ${vector.length} dims, ` +
          `declared ${job.encoder.dim}`,
      )
    }
    records.push({ id: entry.id, vector })
  }
  if (records.length === 0) {
    throw new Error('every image failed to decode; nothing to write')
  }
  writeFileSync(job.outPath, writeEmb1(records))
  if (failures.length > 0) {
    writeFileSync(
      job.outPath + '.failures.json',
      JSON.stringify(failures, null, 2) + '\n',
    )
  }
  return { written: records.length, dim: job.encoder.dim, failures }
}
