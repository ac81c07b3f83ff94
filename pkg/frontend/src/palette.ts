// Room colors locked to the rasterizer palette so studio tiles match
// evaluation PNGs pixel for pixel. Index = room type id.

export const TYPE_NAMES = [
  "", "living", "bedroom", "kitchen", "bathroom", "balcony", "storage",
] as const;

export const TYPE_COLORS = [
  "#ffffff", // 0 background
  "#f4a460", // 1 living
  "#87ceeb", // 2 bedroom
  "#ff6347", // 3 kitchen
  "#98fb98", // 4 bathroom
  "#dda0dd", // 5 balcony
  "#bdb76b", // 6 storage
] as const;

export const WALL_COLOR = "#000000";
export const N_TYPES = 6;

export function typeColor(type: number): string {
  return TYPE_COLORS[type] ?? TYPE_COLORS[0];
}

export function typeName(type: number): string {
  return TYPE_NAMES[type] ?? "?";
}
