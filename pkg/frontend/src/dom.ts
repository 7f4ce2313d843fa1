// Small DOM-building helpers; no framework, plain elements all the way.

export type Child = Node | string | null | undefined;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    if (child === null || child === undefined) continue;
    node.append(child);
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

/** Replace the contents of `node` with the given children. */
export function swap(node: HTMLElement, ...children: Child[]): void {
  clear(node);
  for (const child of children) {
    if (child !== null && child !== undefined) node.append(child);
  }
}
