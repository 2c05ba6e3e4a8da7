/**
 * Spawns the real review service as a test fixture and tears it down.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface Fixture {
  url: string;
  logPath: string;
  flaggedIds: string[];
  stop(): Promise<void>;
}

function reportLines(flagged: number, rest: number): string {
  const header = {
    dataset_name: "ui-fixture",
    total_count: flagged + rest,
    threshold: 0.5,
    model_fingerprint: "f".repeat(64),
    flagged_count: flagged,
  };
  const lines = [JSON.stringify(header)];
  for (let i = 0; i < flagged; i++) {
    const p = 0.99 - i * 0.01;
    lines.push(JSON.stringify({ id: `img-${String(i).padStart(2, "0")}`, p, flagged: true }));
  }
  return lines.join("\n") + "\n";
}

function annotationLines(flagged: number): string {
  const words = ["weapon", "blood stain", "street fight"];
  const lines: string[] = [];
  for (let i = 0; i < flagged; i++) {
    lines.push(
      JSON.stringify({ id: `img-${String(i).padStart(2, "0")}`, labels: [words[i % 3]] }),
    );
  }
  return lines.join("\n") + "\n";
}

function captionLines(flagged: number): string {
  const lines: string[] = [];
  for (let i = 0; i < flagged; i++) {
    if (i % 5 === 4) {
      continue; // leave some items caption-less
    }
    lines.push(
      JSON.stringify({
        id: `img-${String(i).padStart(2, "0")}`,
        captions: [`a photo of item ${i}`],
      }),
    );
  }
  return lines.join("\n") + "\n";
}

/** Starts the service on an OS-assigned port and waits for its URL line. */
export async function startFixture(flagged = 12, rest = 8): Promise<Fixture> {
  const dir = mkdtempSync(join(tmpdir(), "review-ui-"));
  const reportPath = join(dir, "report.ldjson");
  const annotationsPath = join(dir, "annotations.ldjson");
  const captionsPath = join(dir, "captions.ldjson");
  const logPath = join(dir, "decisions.ldjson");
  writeFileSync(reportPath, reportLines(flagged, rest));
  writeFileSync(annotationsPath, annotationLines(flagged));
  writeFileSync(captionsPath, captionLines(flagged));

  const child: ChildProcess = spawn(
    "python3",
    [
      "-m",
      "q16doc.cli",
      "serve",
      "--report",
      reportPath,
      "--annotations",
      annotationsPath,
      "--captions",
      captionsPath,
      "--decisions",
      logPath,
      "--bind",
      "127.0.0.1:0",
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );

  let stderr = "";
  child.stderr?.on("data", (chunk) => {
    stderr += String(chunk);
  });

  const url = await new Promise<string>((resolve, reject) => {
    let buffered = "";
    const timer = setTimeout(
      () => reject(new Error(`service did not start: ${stderr}`)),
      20_000,
    );
    child.stdout?.on("data", (chunk) => {
      buffered += String(chunk);
      const line = buffered.split("\n")[0];
      if (line && line.startsWith("http")) {
        clearTimeout(timer);
        resolve(line.trim());
      }
    });
    child.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`service exited with ${code}: ${stderr}`));
    });
  });

  const flaggedIds = Array.from({ length: flagged }, (_, i) => `img-${String(i).padStart(2, "0")}`);
  return {
    url,
    logPath,
    flaggedIds,
    stop: () =>
      new Promise<void>((resolve) => {
        child.once("exit", () => resolve());
        child.kill("SIGTERM");
        setTimeout(() => {
          child.kill("SIGKILL");
          resolve();
        }, 5_000).unref();
      }),
  };
}
