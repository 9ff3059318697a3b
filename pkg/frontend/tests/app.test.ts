// @vitest-environment jsdom
import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { Api } from '../src/api.js';
import { WhatIfApp } from '../src/main.js';
import { SCHEMA } from './scenario.test.js';

function jsonResponse(body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status: 200, headers: { 'Content-Type': 'application/json' },
  });
}

function serviceFetch(log: string[], options: { failPredict?: boolean } = {}) {
  return async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = String(input);
    const path = new URL(url).pathname;
    log.push(path);
    if (init?.signal?.aborted) throw new DOMException('aborted', 'AbortError');
    if (path === '/v1/schema') return jsonResponse(SCHEMA);
    if (path === '/v1/predict') {
      if (options.failPredict) return new Response('boom', { status: 500 });
      return jsonResponse({
        model_fingerprint: { spalling: 'f1', fire_resistance: 'f2' },
        results: [{ id: 'scenario', sp_probability: 0.6, sp_label: true,
                    fr_minutes: 140.0, rating_class: 'R2', per_member: {} }],
      });
    }
    if (path === '/v1/explain') {
      return jsonResponse({
        model_fingerprint: 'f1', task: 'spalling', baseline: 0.5,
        contributions: { W: 0.06, fc: 0.04, C: 0.0, r: 0.0, P: 0.0 },
        prediction: 0.6, mode: 'exact', background_rows: 16,
      });
    }
    if (path === '/v1/codal') {
      return jsonResponse({ profile: 'printed', ec2_minutes: 120.0,
                            as3600_minutes: 1.0 });
    }
    return new Response('not found', { status: 404 });
  };
}

describe('debounced live updates', () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  async function startApp(log: string[], failPredict = false) {
    const root = document.createElement('div');
    document.body.appendChild(root);
    const api = new Api('http://service.test', serviceFetch(log, { failPredict }));
    const app = new WhatIfApp({ api, root, debounceMs: 250 });
    await app.start();
    return { app, root };
  }

  it('a burst of edits produces one evaluation of the final value', async () => {
    const log: string[] = [];
    const { app } = await startApp(log);
    log.length = 0;  // drop the boot-time calls

    for (const w of [300, 310, 320, 330]) app.onEdit('W', w);
    await vi.advanceTimersByTimeAsync(249);
    expect(log).toEqual([]);  // still inside the debounce window
    await vi.advanceTimersByTimeAsync(1);
    await vi.runAllTimersAsync();
    expect(log.filter((p) => p === '/v1/predict').length).toBe(1);
    expect(app.values.W).toBe(330);  // final value was the one evaluated
  });

  it('separate slow edits each evaluate', async () => {
    const log: string[] = [];
    const { app } = await startApp(log);
    log.length = 0;
    app.onEdit('W', 400);
    await vi.advanceTimersByTimeAsync(300);
    app.onEdit('W', 500);
    await vi.advanceTimersByTimeAsync(300);
    await vi.runAllTimersAsync();
    expect(log.filter((p) => p === '/v1/predict').length).toBe(2);
  });

  it('network failure keeps last results and shows the stale banner', async () => {
    const log: string[] = [];
    const { app, root } = await startApp(log);
    const before = root.querySelector('#sp-probability')!.textContent;

    (app.api as unknown as { fetchFn: typeof fetch }) // swap transport to a failing one
      ;
    const failing = new Api('http://service.test', serviceFetch([], { failPredict: true }));
    (app as unknown as { api: Api }).api = failing;
    app.onEdit('W', 777);
    await vi.advanceTimersByTimeAsync(251);
    await vi.runAllTimersAsync();

    const banner = root.querySelector('#stale-banner')!;
    expect(banner.classList.contains('visible')).toBe(true);
    expect(banner.textContent).toContain('stale');
    expect(root.querySelector('#sp-probability')!.textContent).toBe(before);
  });

  it('client-side validation blocks out-of-range edits before any request', async () => {
    const log: string[] = [];
    const { app, root } = await startApp(log);
    log.length = 0;
    app.onEdit('W', 5000);  // outside [200, 914]
    await vi.advanceTimersByTimeAsync(251);
    await vi.runAllTimersAsync();
    expect(log).toEqual([]);  // nothing sent
    expect(root.querySelector('#stale-banner')!.textContent).toContain('W');
  });

  it('pinning records the scenario and enables export', async () => {
    const log: string[] = [];
    const { app, root } = await startApp(log);
    app.pinCurrent();
    await vi.runAllTimersAsync();
    expect(app.history.length).toBe(1);
    expect(app.history[0].lastResult).not.toBeNull();
    const csv = app.exportCsv();
    expect(csv.split('\n')[0]).toContain('id,provenance,W_mm');
    expect((root.querySelector('#export-button') as HTMLButtonElement).disabled)
      .toBe(false);
  });
});

describe('request cancelation', () => {
  it('a newer edit aborts the in-flight evaluation', async () => {
    vi.useRealTimers();
    const aborted: string[] = [];
    let postBootCalls = 0;
    let booted = false;
    const slowFetch = async (input: RequestInfo | URL,
                             init?: RequestInit): Promise<Response> => {
      const path = new URL(String(input)).pathname;
      if (path === '/v1/schema') return jsonResponse(SCHEMA);
      if (!booted) return serviceFetch([])(input, init);
      postBootCalls += 1;
      if (postBootCalls <= 3) {
        // first post-boot evaluation hangs until the app aborts it
        return new Promise((_resolve, reject) => {
          init?.signal?.addEventListener('abort', () => {
            aborted.push(path);
            reject(new DOMException('aborted', 'AbortError'));
          });
        });
      }
      return serviceFetch([])(input, init);
    };
    const root = document.createElement('div');
    document.body.appendChild(root);
    const app = new WhatIfApp({ api: new Api('http://service.test', slowFetch),
                                root, debounceMs: 1 });
    await app.start();
    booted = true;
    const first = app.evaluateNow();   // hangs
    const second = app.evaluateNow();  // must abort the first chain
    await Promise.all([first, second]);
    expect(aborted.length).toBeGreaterThan(0);
  });
});
