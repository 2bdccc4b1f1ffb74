/**
 * EMB1 binary embedding container.
 *
 * Layout (all integers little-endian):
 *   bytes 0-3  magic "EMB1"
 *   u32        version (1)
 *   u32        dimension D
 *   u32        record count
 *   per record: u32 id byte length, UTF-8 id bytes, D float32 values
 */

export const EMB1_MAGIC = 'EMB1'
export const EMB1_VERSION = 1

export interface EmbeddingRecord {
  id: string
  vector: Float32Array
}

export function writeEmb1(records: EmbeddingRecord[]): Buffer {
  if (records.length === 0) {
    throw new Error('refusing to write an empty embedding file')
  }
  const dim = records[0].vector.length
  for (const rec of records) {
    if (rec.vector.length !== dim) {
      throw new Error(
        `mixed dimensions: ${rec.id} has ${rec.vector.length}, expected ${dim}`,
      )
    }
    for (const x of rec.vector) {
      if (!Number.isFinite(x)) {
        throw new Error(`non-finite component in ${rec.id}`)
      }
    }
  }

  const chunks: Buffer[] = []
  const header = Buffer.alloc(16)
  header.write(EMB1_MAGIC, 0, 'ascii')
  header.writeUInt32LE(EMB1_VERSION, 4)
  header.writeUInt32LE(dim, 8)
  header.writeUInt32LE(records.length, 12)
  chunks.push(header)

  for (const rec of records) {
    const idBytes = Buffer.from(rec.id, 'utf-8')
    const lenBuf = Buffer.alloc(4)
    lenBuf.writeUInt32LE(idBytes.length, 0)
    const vecBuf = Buffer.alloc(4 * dim)
    for (let i = 0; i < dim; i++) {
      vecBuf.writeFloatLE(rec.vector[i], 4 * i)
    }
    chunks.push(lenBuf, idBytes, vecBuf)
  }
  return Buffer.concat(chunks)
}

/** Parse and validate an EMB1 buffer; errors carry the failing byte offset. */
export function readEmb1(data: Buffer): { dim: number; records: EmbeddingRecord[] } {
  const need = (offset: number, count: number, what: string) => {
    if (offset + count > data.length) {
      throw new Error(
        `truncated file: ${what} at byte offset ${offset} needs ${count} bytes, ` +
          `file has ${data.length}`,
      )
    }
  }
  need(0, 16, 'header')
  if (data.toString('ascii', 0, 4) !== EMB1_MAGIC) {
    throw new Error(`bad magic at byte offset 0 (expected "${EMB1_MAGIC}")`)
  }
  const version = data.readUInt32LE(4)
  if (version !== EMB1_VERSION) {
    throw new Error(`unsupported version ${version} at byte offset 4`)
  }
  const dim = data.readUInt32LE(8)
  if (dim === 0) {
    throw new Error('zero dimension at byte offset 8')
  }
  const count = data.readUInt32LE(12)
  let offset = 16
  const records: EmbeddingRecord[] = []
  for (let i = 0; i < count; i++) {
    need(offset, 4, 'id length')
    const idLen = data.readUInt32LE(offset)
    offset += 4
    need(offset, idLen, 'id bytes')
    const id = data.toString('utf-8', offset, offset + idLen)
    offset += idLen
    need(offset, 4 * dim, 'vector')
    const vector = new Float32Array(dim)
    for (let j = 0; j < dim; j++) {
      vector[j] = data.readFloatLE(offset + 4 * j)
    }
    offset += 4 * dim
    records.push({ id, vector })
  }
  if (offset !== data.length) {
    throw new Error(`${data.length - offset} trailing bytes at byte offset ${offset}`)
  }
  return { dim, records }
}
