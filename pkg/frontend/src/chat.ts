/**
 * Session-local chat panel. Messages stay in this browser until the user
 * embeds the transcript into a model element, which replicates it to every
 * member as an embed_chat operation.
 */

export interface ChatMessage {
  author: string;
  text: string;
}

export class ChatPanel {
  readonly messages: ChatMessage[] = [];

  add(author: string, text: string): void {
    const trimmed = text.trim();
    if (trimmed) this.messages.push({ author, text: trimmed });
  }

  transcript(): string {
    return this.messages.map((m) => `${m.author}: ${m.text}`).join("\n");
  }

  clear(): void {
    this.messages.length = 0;
  }
}
