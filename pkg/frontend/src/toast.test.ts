import { describe, expect, it } from "vitest";

import { ToastQueue, toastText } from "./toast.js";

describe("ToastQueue", () => {
  it("expires toasts after the ttl and supports manual dismissal", () => {
    let t = 0;
    const q = new ToastQueue(1000, () => t);
    const a = q.push("first", 400);
    q.push("second");
    expect(q.active().length).toBe(2);

    q.dismiss(a.id);
    expect(q.active().map((x) => x.message)).toEqual(["second"]);

    t = 1500;
    expect(q.active()).toEqual([]);
  });

  it("assigns unique ids", () => {
    const q = new ToastQueue();
    expect(q.push("a").id).not.toBe(q.push("a").id);
  });
});

describe("toastText", () => {
  it("prefixes wire errors with the HTTP status", () => {
    const q = new ToastQueue(1000, () => 0);
    expect(toastText(q.push("bad slot", 400))).toBe("HTTP 400: bad slot");
    expect(toastText(q.push("offline"))).toBe("offline");
  });
});
