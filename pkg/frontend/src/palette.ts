/** Object colors, FNV-1a of the description into the same 16-color palette the
 * mock renderer uses, so client boxes and server PNGs agree. */

export const PALETTE: ReadonlyArray<readonly [number, number, number]> = [
  [230, 57, 70], [29, 53, 87], [69, 123, 157], [168, 218, 220],
  [241, 196, 15], [46, 204, 113], [155, 89, 182], [211, 84, 0],
  [52, 152, 219], [26, 188, 156], [243, 156, 18], [127, 140, 141],
  [192, 57, 43], [142, 68, 173], [39, 174, 96], [22, 160, 133],
];

export function fnv1a(data: Uint8Array): number {
  let h = 0x811c9dc5;
  for (const byte of data) {
    h ^= byte;
    // 32-bit multiply by the FNV prime without BigInt
    h = (h + ((h << 1) >>> 0) + ((h << 4) >>> 0) + ((h << 7) >>> 0) + ((h << 8) >>> 0) + ((h << 24) >>> 0)) >>> 0;
  }
  return h >>> 0;
}

export function paletteColor(description: string): readonly [number, number, number] {
  const hash = fnv1a(new TextEncoder().encode(description));
  return PALETTE[hash % 16];
}

export function cssColor(description: string, alpha = 1): string {
  const [r, g, b] = paletteColor(description);
  return alpha >= 1 ? `rgb(${r}, ${g}, ${b})` : `rgba(${r}, ${g}, ${b}, ${alpha})`;
}
