import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import {
  SubmissionQueue,
  SubmissionQueuedError,
  type PostFn,
} from "../src/submit.js";
import type { SubmitAck } from "../src/types.js";

function ack(trialId: string, replayed = false): SubmitAck {
  return {
    stored: true,
    replayed,
    trial_id: trialId,
    timestamp: 123.0,
    n_answered: 1,
    complete: false,
  };
}

function countingTokens(): () => string {
  let n = 0;
  return () => {
    n += 1;
    return `token-${n}`;
  };
}

describe("SubmissionQueue", () => {
  it("delivers a submission and clears it from the buffer", async () => {
    const calls: { trialId: string; token: string }[] = [];
    const queue = new SubmissionQueue(async (trialId, _payload, token) => {
      calls.push({ trialId, token });
      return ack(trialId);
    }, countingTokens());

    const result = await queue.submit("t1", { ratings: [1, 2, 3, 4, 5, 6, 7] });
    expect(result.stored).toBe(true);
    expect(calls).toEqual([{ trialId: "t1", token: "token-1" }]);
    expect(queue.pending()).toHaveLength(0);
  });

  it("mints distinct tokens for distinct trials", async () => {
    const tokens: string[] = [];
    const queue = new SubmissionQueue(async (trialId, _payload, token) => {
      tokens.push(token);
      return ack(trialId);
    }, countingTokens());
    await queue.submit("t1", { colour: "blue", digit: "1", letter: "A" });
    await queue.submit("t2", { colour: "red", digit: "2", letter: "B" });
    expect(new Set(tokens).size).toBe(2);
  });

  it("queues on network failure and reuses the token on every retry", async () => {
    let failures = 2;
    const tokens: string[] = [];
    const queue = new SubmissionQueue(async (trialId, _payload, token) => {
      tokens.push(token);
      if (failures > 0) {
        failures -= 1;
        throw new TypeError("network down");
      }
      return ack(trialId);
    }, countingTokens());

    const payload = { colour: "white", digit: "9", letter: "Z" };
    await expect(queue.submit("t1", payload)).rejects.toThrow(
      SubmissionQueuedError,
    );
    expect(queue.pending()).toHaveLength(1);
    expect(queue.pending()[0].payload).toEqual(payload);

    await expect(queue.flush()).rejects.toThrow(SubmissionQueuedError);
    expect(queue.pending()).toHaveLength(1);

    const acks = await queue.flush();
    expect(acks).toHaveLength(1);
    expect(queue.pending()).toHaveLength(0);
    expect(tokens).toEqual(["token-1", "token-1", "token-1"]);
  });

  it("treats a replayed ack as success", async () => {
    const queue = new SubmissionQueue(
      async (trialId) => ack(trialId, true),
      countingTokens(),
    );
    const result = await queue.submit("t1", { ratings: [0, 0, 0, 0, 0, 0, 0] });
    expect(result.replayed).toBe(true);
    expect(queue.pending()).toHaveLength(0);
  });

  it("does not queue service rejections", async () => {
    const queue = new SubmissionQueue(async () => {
      throw new ApiError(422, "ratings must be integers");
    }, countingTokens());
    await expect(
      queue.submit("t1", { ratings: [1, 2, 3, 4, 5, 6, 7] }),
    ).rejects.toThrow(ApiError);
    expect(queue.pending()).toHaveLength(0);
  });

  it("flushes multiple pending submissions in order", async () => {
    let down = true;
    const delivered: string[] = [];
    const queue = new SubmissionQueue(async (trialId) => {
      if (down) throw new TypeError("network down");
      delivered.push(trialId);
      return ack(trialId);
    }, countingTokens());

    for (const trialId of ["t1", "t2", "t3"]) {
      await expect(
        queue.submit(trialId, { colour: "blue", digit: "0", letter: "A" }),
      ).rejects.toThrow(SubmissionQueuedError);
    }
    expect(queue.pending().map((entry) => entry.trialId)).toEqual([
      "t1",
      "t2",
      "t3",
    ]);

    down = false;
    const acks = await queue.flush();
    expect(acks.map((a) => a.trial_id)).toEqual(["t1", "t2", "t3"]);
    expect(delivered).toEqual(["t1", "t2", "t3"]);
    expect(queue.pending()).toHaveLength(0);
  });

  it("counts attempts on the pending entry", async () => {
    const queue = new SubmissionQueue(async () => {
      throw new TypeError("network down");
    }, countingTokens());
    await expect(
      queue.submit("t1", { ratings: [1, 1, 1, 1, 1, 1, 1] }),
    ).rejects.toThrow(SubmissionQueuedError);
    await expect(queue.flush()).rejects.toThrow(SubmissionQueuedError);
    expect(queue.pending()[0].attempts).toBe(2);
  });
});

describe("token generation", () => {
  it("uses distinct default tokens when none are injected", async () => {
    const tokens: string[] = [];
    const post: PostFn = async (trialId, _payload, token) => {
      tokens.push(token);
      return ack(trialId);
    };
    const queue = new SubmissionQueue(post);
    await queue.submit("t1", { ratings: [1, 2, 3, 4, 5, 6, 7] });
    await queue.submit("t2", { ratings: [1, 2, 3, 4, 5, 6, 7] });
    expect(tokens[0]).not.toBe(tokens[1]);
    expect(tokens[0].length).toBeGreaterThan(0);
  });
});
