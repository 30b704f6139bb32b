//! Sunlight under the cloud layer and one UAV's battery over a day: serve
//! through the morning, climb above the clouds to charge at midday, then
//! serve into the night while checking that the climb stays affordable.
//!
//! cargo run --release --example solar_day

use ucn::energy::{energy_to_charge, is_sustainable, solar_intensity, step_battery, EnergyModel};
use ucn::world::{Position, Uav, UavStatus};

fn main() {
    let model = EnergyModel::default();
    println!("hour  top    -100 m  -300 m  -600 m");
    for h in (5..=19).step_by(2) {
        let t = h as f64 + 0.5;
        let at = |d: f64| solar_intensity(t, d, &model);
        println!("{h:>4}  {:.3}  {:.3}   {:.3}   {:.3}", at(0.0), at(100.0), at(300.0), at(600.0));
    }

    let serve_altitude = 100.0;
    let mut uav = Uav {
        id: 0,
        position: Position { x: 0.0, y: 0.0, z: serve_altitude },
        battery: 300.0,
        status: UavStatus::Serving,
        join_countdown: 0,
    };
    println!("\nhour  status    battery  climb cost  sustainable");
    for h in 6..24 {
        let want = if (10..14).contains(&h) { UavStatus::Charging } else { UavStatus::Serving };
        if want != uav.status {
            if want == UavStatus::Charging {
                uav.battery -= energy_to_charge(uav.position.z, &model);
                uav.position.z = model.cloud_top;
            } else {
                uav.position.z = serve_altitude;
            }
            uav.status = want;
        }
        uav.battery = step_battery(&uav, 0.0, &model, h as f64 + 0.5);
        let ok = is_sustainable(&uav, &model);
        println!(
            "{h:>4}  {:<9} {:>7.1}  {:>10.1}  {ok}",
            format!("{:?}", uav.status),
            uav.battery,
            energy_to_charge(uav.position.z, &model)
        );
        if !ok {
            println!("      the UAV can no longer reach the charging layer");
            break;
        }
    }
}
