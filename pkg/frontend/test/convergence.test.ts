/**
 * Two concurrent sessions on one project (secondary acceptance criterion 8):
 * an action dispatched in one browser shows up on the other's board through
 * the event stream alone, illegal actions render rejection notices without
 * changing the board, and both boards converge to the server's final state.
 */

import { describe, expect, it } from "vitest";

import { boardsEqual, buildBoard } from "../src/board.js";
import { ChatPanel } from "../src/chat.js";
import { ProjectClient } from "../src/client.js";
import type { ProjectView } from "../src/protocol.js";
import { FakeServer, sessionFixture } from "./fake.js";

const finalView = sessionFixture.final_snapshot as unknown as ProjectView;

async function twoSessions() {
  const server = new FakeServer();
  const alice = new ProjectClient(
    server.connect("alice"), sessionFixture.project, "alice", "ui-alice",
  );
  const bob = new ProjectClient(
    server.connect("bob"), sessionFixture.project, "bob", "ui-bob",
  );
  await alice.open();
  await bob.open();
  return { server, alice, bob };
}

describe("two concurrent sessions", () => {
  it("replays the recorded collaboration and converges", async () => {
    const { alice, bob } = await twoSessions();
    const clients = { alice, bob } as const;

    // bob starts a task; alice's board moves the card with no reload
    await bob.startTask("analyze");
    expect(alice.replica.view!.tasks["analyze"].state).toBe("active");
    expect(bob.replica.view!.tasks["analyze"].state).toBe("active");

    // alice tries the same start: rejected, notice rendered, board unchanged
    const tasksBefore = structuredClone(alice.replica.view!.tasks);
    const result = await alice.startTask("analyze");
    expect((result as { verdict: string }).verdict).toBe("rejected");
    expect(alice.notices).toHaveLength(1);
    expect(alice.notices[0].reason).toContain("illegal-transition");
    expect(alice.replica.view!.tasks).toEqual(tasksBefore);

    // remaining scripted steps, each dispatched by its recorded author
    await bob.attach("req_spec", "file://req.md", "v1");
    await bob.completeTask("analyze");
    await alice.assign("design", "alice");
    await alice.dispatch(
      sessionFixture.steps[5].op.payload as { type: string } & Record<string, unknown>,
    );
    const chat = new ChatPanel();
    chat.add("alice", "outline ok?");
    chat.add("bob", "yes, ship it");
    await alice.embedChat("design", chat.transcript());

    // boards converge to each other and to the server's own final state
    const boardAlice = buildBoard(alice.replica.view!);
    const boardBob = buildBoard(bob.replica.view!);
    expect(boardsEqual(boardAlice, boardBob)).toBe(true);
    expect(alice.replica.view).toEqual(finalView);
    expect(bob.replica.view).toEqual(finalView);
    expect(boardsEqual(boardAlice, buildBoard(finalView))).toBe(true);

    // the embedded chat replicated to the other session
    const bobChat = bob.replica.view!.annotations["design"] ?? [];
    expect(bobChat.at(-1)?.text).toContain("ship it");

    // only the author of the illegal action sees a notice
    expect(clients.bob.notices).toHaveLength(0);
  });

  it("completion events move cards between columns live", async () => {
    const { alice, bob } = await twoSessions();
    await bob.startTask("analyze");
    await alice.startTask("analyze"); // rejected no-op, keeps script aligned
    await bob.attach("req_spec", "file://req.md", "v1");

    const before = buildBoard(alice.replica.view!);
    expect(before.columns["active"].map((c) => c.id)).toContain("analyze");

    await bob.completeTask("analyze");
    const after = buildBoard(alice.replica.view!);
    expect(after.columns["done"].map((c) => c.id)).toContain("analyze");
    expect(after.columns["active"].map((c) => c.id)).not.toContain("analyze");
    // completing analyze made its successor ready on both boards
    expect(alice.replica.view!.tasks["design"].state).toBe("ready");
    expect(bob.replica.view!.tasks["design"].state).toBe("ready");
  });
});
