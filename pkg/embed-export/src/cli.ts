#!/usr/bin/env node
/**
 * export-embeddings --images manifest.csv --encoder <name> --out file.emb [--dim D]
 *
 * The images manifest is a CSV with columns id,path; ids follow the
 * "item/frame" (input photos) or "item/frame/view" (rendered views)
 * convention expected by the training pipeline.
 */

import { parseImagesCsv, runExport } from './export'
import { resolveEncoder } from './encoders'

function parseArgs(argv: string[]): Map<string, string> {
  const args = new Map<string, string>()
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i]
    if (!arg.startsWith('--')) {
      throw new Error(`unexpected argument "${arg}"`)
    }
    const eq = arg.indexOf('=')
    if (eq >= 0) {
      args.set(arg.slice(2, eq), arg.slice(eq + 1))
    } else {
      const value = argv[i + 1]
      if (value === undefined || value.startsWith('--')) {
        throw new Error(`missing value for ${arg}`)
      }
      args.set(arg.slice(2), value)
      i++
    }
  }
  return args
}

export async function main(argv: string[]): Promise<number> {
  let args: Map<string, string>
  try {
    args = parseArgs(argv)
    for (const key of ['images', 'out']) {
      if (!args.has(key)) throw new Error(`--${key} is required`)
    }
  } catch (err) {
    console.error(`usage error: ${err instanceof Error ? err.message : err}`)
    console.error(
      'usage: export-embeddings --images manifest.csv --encoder <name> ' +
        '--out file.emb [--dim D]',
    )
    return 2
  }
  try {
    const dim = args.has('dim') ? parseInt(args.get('dim')!, 10) : undefined
    if (dim !== undefined && !(dim > 0)) {
      throw new Error(`--dim must be a positive integer`)
    }
    const encoder = resolveEncoder(args.get('encoder') ?? 'patch-stats', dim)
    const images = parseImagesCsv(args.get('images')!)
    const result = await runExport({
      images,
      encoder,
      outPath: args.get('out')!,
    })
    console.log(
      `wrote ${result.written} embeddings (dim ${result.dim}, ` +
        `encoder ${encoder.name}) to ${args.get('out')}`,
    )
    if (result.failures.length > 0) {
      console.error(
        `skipped ${result.failures.length} undecodable image(s); ` +
          `see ${args.get('out')}.failures.json`,
      )
    }
    return 0
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`)
    return 1
  }
}

if (require.main === module) {
  main(process.argv.slice(2)).then(code => {
    process.exitCode = code
  })
}
