/**
 * Minimal image loading: 8-bit PNG (via pngjs) and binary/ASCII PPM.
 * Everything is converted to a flat RGB byte array.
 */

import { readFileSync } from 'fs'
import { PNG } from 'pngjs'

export interface RgbImage {
  width: number
  height: number
  /** row-major RGB, 3 bytes per pixel */
  pixels: Uint8Array
}

function fromRgba(width: number, height: number, rgba: Uint8Array): RgbImage {
  const pixels = new Uint8Array(width * height * 3)
  for (let i = 0, j = 0; i < rgba.length; i += 4, j += 3) {
    pixels[j] = rgba[i]
    pixels[j + 1] = rgba[i + 1]
    pixels[j + 2] = rgba[i + 2]
  }
  return { width, height, pixels }
}

export function decodePng(data: Buffer): RgbImage {
  const png = PNG.sync.read(data)
  return fromRgba(png.width, png.height, new Uint8Array(png.data))
}

export function decodePpm(data: Buffer): RgbImage {
  // header tokens: magic, width, height, maxval; '#' starts a comment
  const tokens: string[] = []
  let pos = 0
  while (tokens.length < 4 && pos < data.length) {
    const ch = String.fromCharCode(data[pos])
    if (ch === '#') {
      while (pos < data.length && data[pos] !== 0x0a) pos++
      pos++
    } else if (/\s/.test(ch)) {
      pos++
    } else {
      let tok = ''
      while (pos < data.length && !/\s/.test(String.fromCharCode(data[pos]))) {
        tok += String.fromCharCode(data[pos])
        pos++
      }
      tokens.push(tok)
    }
  }
  const [magic, w, h, maxval] = tokens
  if ((magic !== 'P6' && magic !== 'P3') || tokens.length < 4) {
    throw new Error(`not a PPM image (magic ${magic})`)
  }
  const width = parseInt(w, 10)
  const height = parseInt(h, 10)
  if (!(width > 0 && height > 0) || parseInt(maxval, 10) !== 255) {
    throw new Error('unsupported PPM geometry or maxval (only maxval 255)')
  }
  const n = width * height * 3
  const pixels = new Uint8Array(n)
  if (magic === 'P6') {
    // exactly one whitespace byte separates maxval from the binary samples
    pos += 1
    if (data.length - pos < n) {
      throw new Error(`PPM body truncated: need ${n} bytes, have ${data.length - pos}`)
    }
    pixels.set(data.subarray(pos, pos + n))
  } else {
    const values = data
      .toString('ascii', pos)
      .split(/\s+/)
      .filter(t => t.length > 0)
    if (values.length < n) {
      throw new Error(`PPM body truncated: need ${n} samples, have ${values.length}`)
    }
    for (let i = 0; i < n; i++) pixels[i] = parseInt(values[i], 10)
  }
  return { width, height, pixels }
}

export function loadImage(path: string): RgbImage {
  const data = readFileSync(path)
  if (data.length >= 8 && data[0] === 0x89 && data.toString('ascii', 1, 4) === 'PNG') {
    return decodePng(data)
  }
  if (data.length >= 2 && data[0] === 0x50 /* P */) {
    return decodePpm(data)
  }
  throw new Error(`unsupported image format in ${path} (PNG or PPM expected)`)
}
