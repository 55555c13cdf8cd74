import { describe, expect, it } from "vitest";

import { ApiError, FetchLike, VaultApi } from "../src/api";

function fakeFetch(
  responses: Array<{ status: number; body: unknown }>
): { fetchFn: FetchLike; calls: Array<{ url: string; init?: unknown }> } {
  const calls: Array<{ url: string; init?: unknown }> = [];
  const fetchFn: FetchLike = async (url, init) => {
    calls.push({ url, init });
    const next = responses.shift();
    if (!next) throw new Error("no more responses");
    return { status: next.status, json: async () => next.body };
  };
  return { fetchFn, calls };
}

const VIEW = {
  session_id: "abc",
  level: 5,
  status: "InProgress",
  step_index: 0,
  digits_accepted: 0,
  pattern: { A: [0], B: [1, 2, 3, 4, 5, 6, 7, 8, 9] },
};

describe("VaultApi", () => {
  it("creates a session", async () => {
    const { fetchFn, calls } = fakeFetch([
      { status: 201, body: { session_id: "abc", view: VIEW } },
    ]);
    const api = new VaultApi("http://host", fetchFn);
    const resp = await api.createSession({ level: 5, reveal_weights: true });
    expect(resp.session_id).toBe("abc");
    expect(calls[0].url).toBe("http://host/api/session");
    const init = calls[0].init as { method: string; body: string };
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body)).toEqual({ level: 5, reveal_weights: true });
  });

  it("submits signals to the session endpoint", async () => {
    const { fetchFn, calls } = fakeFetch([
      { status: 200, body: { view: VIEW, events: [] } },
    ]);
    const api = new VaultApi("http://host", fetchFn);
    await api.submitSignal("abc", { point: [0.5, 0.5] });
    expect(calls[0].url).toBe("http://host/api/session/abc/signal");
  });

  it("maps service error payloads to ApiError", async () => {
    const { fetchFn } = fakeFetch([
      {
        status: 404,
        body: { error: { code: "unknown_session", message: "no session" } },
      },
    ]);
    const api = new VaultApi("http://host", fetchFn);
    try {
      await api.getSession("nope");
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).code).toBe("unknown_session");
      expect((err as ApiError).status).toBe(404);
    }
  });

  it("wraps non-JSON-error failures", async () => {
    const { fetchFn } = fakeFetch([{ status: 500, body: "boom" }]);
    const api = new VaultApi("http://host", fetchFn);
    await expect(api.getSession("x")).rejects.toMatchObject({
      code: "unknown_error",
    });
  });
});
