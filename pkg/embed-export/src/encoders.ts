/**
 * Pluggable image encoders.
 *
 * `patch-stats` is the built-in deterministic encoder: it needs no model
 * weights or network access and always produces the same vector for the same
 * image bytes, which makes it the evaluation-mode reference and the test
 * encoder. `clip` delegates to @xenova/transformers when that package is
 * installed, giving real CLIP features (768-dim for ViT-L/14 class models).
 */

import { RgbImage } from './image'

export interface Encoder {
  name: string
  dim: number
  encode(image: RgbImage): Promise<Float32Array>
}

/**
 * Deterministic grid encoder: mean R, G, B per cell of a g x g grid over the
 * image, g chosen as the largest grid with 3*g*g <= dim; any remaining
 * components are global luminance moments followed by zeros. Pixels are
 * accumulated in integers, so the result depends only on the decoded pixels.
 */
export function patchStatsEncoder(dim = 768): Encoder {
  if (dim < 12) {
    throw new Error(`patch-stats needs dim >= 12, got ${dim}`)
  }
  const grid = Math.max(1, Math.floor(Math.sqrt(dim / 3)))
  return {
    name: `patch-stats-${dim}`,
    dim,
    async encode(image: RgbImage): Promise<Float32Array> {
      const { width, height, pixels } = image
      const sums = new Float64Array(grid * grid * 3)
      const counts = new Float64Array(grid * grid)
      for (let y = 0; y < height; y++) {
        const gy = Math.min(grid - 1, Math.floor((y * grid) / height))
        for (let x = 0; x < width; x++) {
          const gx = Math.min(grid - 1, Math.floor((x * grid) / width))
          const cell = gy * grid + gx
          const p = (y * width + x) * 3
          sums[cell * 3] += pixels[p]
          sums[cell * 3 + 1] += pixels[p + 1]
          sums[cell * 3 + 2] += pixels[p + 2]
          counts[cell]++
        }
      }
      const out = new Float32Array(dim)
      for (let cell = 0; cell < grid * grid; cell++) {
        const n = counts[cell] || 1
        out[cell * 3] = Math.fround(sums[cell * 3] / n / 255)
        out[cell * 3 + 1] = Math.fround(sums[cell * 3 + 1] / n / 255)
        out[cell * 3 + 2] = Math.fround(sums[cell * 3 + 2] / n / 255)
      }
      let tail = grid * grid * 3
      if (tail < dim) {
        let lumaSum = 0
        let lumaSq = 0
        const total = width * height
        for (let p = 0; p < pixels.length; p += 3) {
          const l = 0.299 * pixels[p] + 0.587 * pixels[p + 1] + 0.114 * pixels[p + 2]
          lumaSum += l
          lumaSq += l * l
        }
        const mean = lumaSum / total / 255
        const variance = Math.max(0, lumaSq / total / (255 * 255) - mean * mean)
        out[tail] = Math.fround(mean)
        if (tail + 1 < dim) out[tail + 1] = Math.fround(Math.sqrt(variance))
        // anything beyond stays zero
      }
      return out
    },
  }
}

/**
 * Real pretrained encoder through @xenova/transformers (install it to use);
 * pass a model name such as "Xenova/clip-vit-large-patch14" (768-dim
 * pooled output) or the 336px variant for higher input resolution.
 */
export function clipEncoder(model: string, dim = 768): Encoder {
  let pipe: any = null
  return {
    name: `clip:${model}`,
    dim,
    async encode(image: RgbImage): Promise<Float32Array> {
      if (pipe === null) {
        let transformers: any
        try {
          transformers = await import('@xenova/transformers' as string)
        } catch {
          throw new Error(
            'encoder requires the optional dependency @xenova/transformers; ' +
              'install it with: npm install @xenova/transformers',
          )
        }
        pipe = await transformers.pipeline('image-feature-extraction', model)
      }
      const { RawImage } = await import('@xenova/transformers' as string)
      const raw = new RawImage(image.pixels, image.width, image.height, 3)
      const output = await pipe(raw, { pooling: 'mean' })
      const vec = Float32Array.from(output.data as Iterable<number>)
      if (vec.length !== dim) {
        throw new Error(
          `encoder produced ${vec.length} dims but ${dim} were declared; ` +
            'pass the matching --dim',
        )
      }
      return vec
    },
  }
}

export function resolveEncoder(spec: string, dim?: number): Encoder {
  if (spec === 'patch-stats' || spec.startsWith('patch-stats')) {
    return patchStatsEncoder(dim ?? 768)
  }
  if (spec === 'clip' || spec.startsWith('clip:')) {
    const model =
      spec === 'clip' ? 'Xenova/clip-vit-large-patch14' : spec.slice('clip:'.length)
    return clipEncoder(model, dim ?? 768)
  }
  throw new Error(
    `unknown encoder "${spec}" (use "patch-stats" or "clip[:model-name]")`,
  )
}
