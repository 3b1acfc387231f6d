"""FSM transition semantics and the composed monitor."""

from mcusentry.layout import default_layout
from mcusentry.monitor import (AtomState, EkrState, GpioState, Monitor,
                               MonitorConfig, MonitorInput, MonitorState,
                               monitor_step, read_mem_pred, step_atomicity_fsm,
                               step_ekr_write_fsm, step_gpio_fsm,
                               write_mem_pred)

LAYOUT = default_layout()
CFG = MonitorConfig.from_layout(LAYOUT)
ER = (0x4000, 0x4004)


def inp(pc=0x5000, r_en=False, w_en=False, d_addr=0, dma_en=False,
        dma_addr=0, irq=False, er=ER):
    return MonitorInput(pc=pc, r_en=r_en, w_en=w_en, d_addr=d_addr,
                        dma_en=dma_en, dma_addr=dma_addr, irq=irq,
                        er_min=er[0], er_max=er[1])


class TestAccessPredicates:
    def test_cpu_read_in_region(self):
        assert read_mem_pred(LAYOUT.gpio, inp(r_en=True, d_addr=LAYOUT.gpio.start))

    def test_all_quiet_is_no_access(self):
        assert not read_mem_pred(LAYOUT.gpio, inp())
        assert not write_mem_pred(LAYOUT.gpio, inp())

    def test_dma_counts_as_read_and_write(self):
        i = inp(dma_en=True, dma_addr=LAYOUT.gpio.start)
        assert read_mem_pred(LAYOUT.gpio, i)
        assert write_mem_pred(LAYOUT.gpio, i)

    def test_cpu_write_to_metadata(self):
        i = inp(w_en=True, d_addr=LAYOUT.er_metadata.start)
        assert write_mem_pred(LAYOUT.er_metadata, i)
        assert not read_mem_pred(LAYOUT.er_metadata, i)


class TestGpioFsm:
    def test_reset_leaves_only_at_zero(self):
        assert step_gpio_fsm(GpioState.RESET, inp(pc=0x1234), CFG) == \
            (GpioState.RESET, True)
        assert step_gpio_fsm(GpioState.RESET, inp(pc=0), CFG) == \
            (GpioState.RLOCK, False)

    def test_locked_unlocks_on_auth_address(self):
        state, reset = step_gpio_fsm(GpioState.RLOCK, inp(pc=LAYOUT.i_auth), CFG)
        assert state is GpioState.RUNLOCK and not reset

    def test_locked_read_resets(self):
        state, reset = step_gpio_fsm(
            GpioState.RLOCK, inp(dma_en=True, dma_addr=LAYOUT.gpio.start), CFG)
        assert state is GpioState.RESET and reset

    def test_unlocked_outside_read_resets(self):
        state, reset = step_gpio_fsm(
            GpioState.RUNLOCK, inp(pc=0x5000, r_en=True, d_addr=LAYOUT.gpio.start),
            CFG)
        assert state is GpioState.RESET and reset

    def test_unlocked_inside_read_allowed(self):
        state, reset = step_gpio_fsm(
            GpioState.RUNLOCK, inp(pc=0x4002, r_en=True, d_addr=LAYOUT.gpio.start),
            CFG)
        assert state is GpioState.RUNLOCK and not reset

    def test_read_at_exit_word_resets(self):
        state, reset = step_gpio_fsm(
            GpioState.RUNLOCK, inp(pc=ER[1], r_en=True, d_addr=LAYOUT.gpio.start),
            CFG)
        assert state is GpioState.RESET and reset

    def test_exit_relocks(self):
        state, reset = step_gpio_fsm(GpioState.RUNLOCK, inp(pc=ER[1]), CFG)
        assert state is GpioState.RLOCK and not reset

    def test_metadata_write_revokes(self):
        state, reset = step_gpio_fsm(
            GpioState.RUNLOCK,
            inp(pc=0x5000, w_en=True, d_addr=LAYOUT.er_metadata.start), CFG)
        assert state is GpioState.RLOCK and not reset

    def test_write_during_auth_cycle_resets(self):
        for start in (GpioState.RLOCK, GpioState.RUNLOCK):
            state, reset = step_gpio_fsm(
                start, inp(pc=LAYOUT.i_auth, dma_en=True,
                           dma_addr=ER[0]), CFG)
            assert state is GpioState.RESET and reset


class TestEkrWriteFsm:
    def test_boot_unlocks(self):
        assert step_ekr_write_fsm(EkrState.RESET, inp(pc=0), CFG) == \
            (EkrState.WUNLOCK, False)

    def test_trusted_write_allowed(self):
        state, reset = step_ekr_write_fsm(
            EkrState.WUNLOCK,
            inp(pc=LAYOUT.vr.start, w_en=True, d_addr=LAYOUT.ekr.start), CFG)
        assert state is EkrState.WUNLOCK and not reset

    def test_untrusted_write_resets(self):
        state, reset = step_ekr_write_fsm(
            EkrState.WUNLOCK,
            inp(pc=0x5000, w_en=True, d_addr=LAYOUT.ekr.start), CFG)
        assert state is EkrState.RESET and reset

    def test_dma_touch_always_resets(self):
        state, reset = step_ekr_write_fsm(
            EkrState.WUNLOCK,
            inp(pc=LAYOUT.vr.start, dma_en=True, dma_addr=LAYOUT.ekr.start), CFG)
        assert state is EkrState.RESET and reset


class TestAtomicityFsm:
    def test_entry_at_first_word(self):
        state, reset = step_atomicity_fsm(AtomState.NOT_ER, inp(pc=ER[0]), CFG)
        assert state is AtomState.FIRST_ER and not reset

    def test_entry_elsewhere_resets(self):
        state, reset = step_atomicity_fsm(AtomState.NOT_ER, inp(pc=ER[0] + 2), CFG)
        assert state is AtomState.RESET and reset

    def test_irq_inside_resets(self):
        state, reset = step_atomicity_fsm(AtomState.MID_ER,
                                          inp(pc=ER[0] + 2, irq=True), CFG)
        assert state is AtomState.RESET and reset

    def test_dma_inside_resets(self):
        state, reset = step_atomicity_fsm(
            AtomState.MID_ER, inp(pc=ER[0] + 2, dma_en=True, dma_addr=0xE000),
            CFG)
        assert state is AtomState.RESET and reset

    def test_illegal_exit_resets(self):
        state, reset = step_atomicity_fsm(AtomState.MID_ER, inp(pc=0x5000), CFG)
        assert state is AtomState.RESET and reset

    def test_legal_walk(self):
        state = AtomState.NOT_ER
        for pc in (ER[0], ER[0] + 2, ER[1], 0x5000):
            state, reset = step_atomicity_fsm(state, inp(pc=pc), CFG)
            assert not reset
        assert state is AtomState.NOT_ER

    def test_reentry_from_exit_word(self):
        state, reset = step_atomicity_fsm(AtomState.LAST_ER, inp(pc=ER[0]), CFG)
        assert state is AtomState.FIRST_ER and not reset
        state, reset = step_atomicity_fsm(AtomState.LAST_ER, inp(pc=ER[0] + 2), CFG)
        assert state is AtomState.RESET and reset

    def test_degenerate_window_enters_exit_state(self):
        er = (0x4000, 0x4000)
        state, reset = step_atomicity_fsm(AtomState.NOT_ER,
                                          inp(pc=0x4000, er=er), CFG)
        assert state is AtomState.LAST_ER and not reset
        state, reset = step_atomicity_fsm(state, inp(pc=0x5000, er=er), CFG)
        assert state is AtomState.NOT_ER and not reset


class TestComposition:
    def test_global_reset_is_disjunction(self):
        live = MonitorState(GpioState.RLOCK, EkrState.WUNLOCK, AtomState.NOT_ER)
        nxt, reset = monitor_step(live, inp(), CFG)
        assert not reset
        nxt, reset = monitor_step(
            live, inp(r_en=True, d_addr=LAYOUT.gpio.start), CFG)
        assert reset

    def test_any_reset_reinitializes_all_fsms(self):
        live = MonitorState(GpioState.RUNLOCK, EkrState.WUNLOCK, AtomState.NOT_ER)
        nxt, reset = monitor_step(
            live, inp(pc=0x5000, w_en=True, d_addr=LAYOUT.ekr.start), CFG)
        assert reset
        assert nxt == MonitorState(GpioState.RESET, EkrState.RESET,
                                   AtomState.RESET, True)

    def test_boot_record_releases_all_fsms(self):
        state = MonitorState()
        nxt, reset = monitor_step(state, inp(pc=0), CFG)
        assert not reset
        assert nxt == MonitorState(GpioState.RLOCK, EkrState.WUNLOCK,
                                   AtomState.NOT_ER, False)

    def test_dirty_boot_record_stays_reset(self):
        state = MonitorState()
        nxt, reset = monitor_step(
            state, inp(pc=0, dma_en=True, dma_addr=LAYOUT.gpio.start), CFG)
        assert reset
        assert nxt.gpio is GpioState.RESET

    def test_ekr_disabled_ignores_key_region(self):
        cfg = MonitorConfig.from_layout(LAYOUT, ekr_enabled=False)
        live = MonitorState(GpioState.RLOCK, EkrState.WUNLOCK, AtomState.NOT_ER)
        _, reset = monitor_step(
            live, inp(r_en=True, d_addr=LAYOUT.ekr.start), cfg)
        assert not reset
        _, reset = monitor_step(
            live, inp(w_en=True, d_addr=LAYOUT.ekr.start, pc=0x5000), cfg)
        assert not reset


class TestObserverMode:
    def test_observer_never_requests_reset_but_logs(self):
        monitor = Monitor.for_layout(LAYOUT, observe_only=True)
        assert monitor.step(inp(pc=0)) is False
        out = monitor.step(inp(r_en=True, d_addr=LAYOUT.gpio.start, pc=0x5000))
        assert out is False
        assert monitor.local_resets_log[-1][0] is True  # gpio fsm flagged
