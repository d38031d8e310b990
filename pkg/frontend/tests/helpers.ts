import type { FetchLike } from "../src/api";

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

export function mockFetch(
  responder: (url: string, init?: RequestInit) => unknown,
): { fetchFn: FetchLike; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    calls.push({
      url,
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(init.body as string) : undefined,
    });
    const payload = responder(url, init);
    return {
      ok: true,
      status: 200,
      json: async () => payload,
    } as Response;
  };
  return { fetchFn, calls };
}

export function container(): HTMLElement {
  const el = document.createElement("div");
  document.body.appendChild(el);
  return el;
}

export function fire(el: Element, type: string): void {
  el.dispatchEvent(new Event(type, { bubbles: true }));
}

export function click(el: Element): void {
  el.dispatchEvent(new MouseEvent("click", { bubbles: true }));
}
